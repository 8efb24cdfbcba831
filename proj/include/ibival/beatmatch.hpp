#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ibival/types.hpp"

namespace ibival {

struct MatchCounts {
  std::size_t total_ref = 0;
  std::size_t total_det = 0;
  std::size_t correct = 0;
  std::size_t extra = 0;
  std::size_t missing = 0;
};

/// Outcome of classifying every beat. Holds the accounting identities
/// correct + missing == total_ref and correct + extra == total_det.
struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (ref_idx, det_idx)
  std::vector<std::size_t> extra_det_indices;
  std::vector<std::size_t> missing_ref_indices;
  MatchCounts counts;
  std::vector<MatchCounts> per_window;

  /// Mean nearest-beat distance; above 200 ms the series look unsynchronized
  /// and alignment_warning is set (matching still runs).
  double nearest_pair_mae_ms = 0.0;
  bool alignment_warning = false;
};

struct DetectionSummary {
  double correct_pct = 0.0;
  double extra_pct = 0.0;
  double missing_pct = 0.0;
  MatchCounts counts;
};

/// Classifies each detected beat against the reference. A detected beat at
/// time t whose associated interval is l claims the nearest unclaimed
/// reference beat inside [t - l/2, t + l/2] and counts as correct; with no
/// candidate it is extra. Unclaimed reference beats are missing. Detected
/// beats are processed in ascending time; exact distance ties go to the
/// earlier reference beat. The first detected beat, which has no preceding
/// interval, uses the following one.
///
/// Pass the reference window tiling to also get per-window counts (required
/// by mark_clean_windows).
MatchResult match(const BeatSeries& det, const BeatSeries& ref,
                  std::span<const MinuteWindow> wins = {});

/// Percentages: correct and missing against total reference beats, extra
/// against total detected beats.
DetectionSummary summarize(const MatchResult& result);

/// Copy of the tiling with clean = (no extra and no missing in the window).
std::vector<MinuteWindow> mark_clean_windows(const MatchResult& result,
                                             std::span<const MinuteWindow> wins);

}  // namespace ibival
