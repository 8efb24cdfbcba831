#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ibival/types.hpp"

namespace ibival {

/// Linear model of the device clock as seen from the reference clock:
///
///   t_device = slope * t_reference + offset_ms + per_window_offset_ms[w]
///
/// where w is the window containing t_reference. slope is the device rate
/// relative to the reference ("device seconds per reference second") and
/// offset_ms is how far the device clock leads at reference time zero.
/// Per-window offsets are residual leads measured after the global
/// correction; they are empty until refine_per_window() runs.
struct ClockMap {
  double slope = 1.0;
  double offset_ms = 0.0;
  std::vector<double> per_window_offset_ms;
  std::int64_t windows_start_ms = 0;
  std::int64_t window_len_ms = 60'000;

  bool refined() const { return !per_window_offset_ms.empty(); }
};

/// Search grids for the alignment estimate. The defaults follow a
/// coarse-to-fine plan: offsets over +/-60 s at 100 ms then +/-200 ms at
/// 1 ms; slopes over +/-500 ppm at 10 ppm then +/-20 ppm at 1 ppm. The coarse
/// pass may evaluate on a strided subset of detected beats; the fine pass
/// always uses every beat.
struct SearchConfig {
  double offset_range_ms = 60'000.0;
  double offset_coarse_step_ms = 100.0;
  double offset_fine_range_ms = 200.0;
  double offset_fine_step_ms = 1.0;

  double slope_range_ppm = 500.0;
  double slope_coarse_step_ppm = 10.0;
  double slope_fine_range_ppm = 20.0;
  double slope_fine_step_ppm = 1.0;

  double pairing_cap_ms = 500.0;  // nearest-beat pairing distance cap
  std::size_t coarse_stride = 4;

  double window_offset_range_ms = 250.0;
  double window_offset_step_ms = 1.0;
  std::size_t min_window_matches = 10;
};

/// Objective values and bookkeeping from an alignment run. The MAE figures
/// are the search objective itself: mean distance between each detected beat
/// and its nearest reference beat, with beats that pair beyond the cap
/// charged the cap. That keeps after_mae_ms <= before_mae_ms guaranteed even
/// when alignment changes how many beats pair.
struct SyncReport {
  double before_mae_ms = 0.0;
  double after_mae_ms = 0.0;
  std::size_t before_paired = 0;
  std::size_t after_paired = 0;
  std::size_t evaluations = 0;

  std::vector<double> window_before_mae_ms;
  std::vector<double> window_after_mae_ms;
};

struct GlobalAlignment {
  ClockMap map;
  SyncReport report;
};

/// Grid search for the (slope, offset) pair minimizing the pairing objective.
/// Deterministic: ties resolve to the smallest |offset|, then the smallest
/// |slope - 1|.
GlobalAlignment estimate_global_alignment(const BeatSeries& det,
                                          const BeatSeries& ref,
                                          const SearchConfig& search = {});

/// Per-window residual offsets on top of a global alignment. Windows with
/// fewer than min_window_matches paired beats inherit the nearest resolved
/// neighbor's offset (preferring the previous window).
GlobalAlignment refine_per_window(const BeatSeries& det, const BeatSeries& ref,
                                  const ClockMap& global_map,
                                  std::span<const MinuteWindow> wins,
                                  const SearchConfig& search = {});

/// Forward application of the map: t' = slope * (t - anchor) ... reduced to
/// t' = slope * t + offset + per_window_offset(window of t). Turns a
/// reference-clock series into the modeled device-clock series. Output is
/// re-validated; per-window offsets large enough to reorder beats raise
/// non_monotonic.
BeatSeries apply(const ClockMap& map, const BeatSeries& series,
                 const ValidationLimits& limits = ValidationLimits{.strict = false});

/// Inverse application: maps a device-clock series onto the reference clock.
/// This is the correction the rest of the pipeline consumes.
BeatSeries align(const ClockMap& map, const BeatSeries& det,
                 const ValidationLimits& limits = ValidationLimits{.strict = false});

}  // namespace ibival
