#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ibival/beatmatch.hpp"
#include "ibival/types.hpp"

namespace ibival {

/// One matched interval: the reference interval and the device interval that
/// span the same two matched beat pairs. Error convention is device minus
/// reference, so a device reading short gives a negative error.
struct PairSample {
  std::int64_t rri_ms = 0;
  std::int64_t ibi_ms = 0;
  std::int64_t end_timestamp_ms = 0;
  std::size_t window_index = 0;
};

struct PairSet {
  std::vector<PairSample> pairs;
  std::size_t dropped_unclean = 0;
  std::size_t dropped_ectopic = 0;

  std::size_t size() const { return pairs.size(); }
};

struct ErrorStats {
  double me_ms = 0.0;
  double mae_ms = 0.0;
  double mape_pct = 0.0;
  double rmse_ms = 0.0;
  std::size_t n_pairs = 0;
};

struct HrvStats {
  double rmssd_ms = 0.0;
  double pnn50_pct = 0.0;
  double std_ms = 0.0;
  std::size_t n_intervals = 0;
};

struct BlandAltmanData {
  std::vector<std::pair<double, double>> points;  // (mean_ms, diff_ms)
  double bias_ms = 0.0;
  double sd_ms = 0.0;
  double loa_low_ms = 0.0;
  double loa_high_ms = 0.0;
};

/// How an interval may participate in statistics. Excluded intervals are out
/// of everything; barred intervals (the neighbors of an ectopic pair) still
/// count for the standard deviation but not for successive differences.
enum class IntervalUse : std::uint8_t { usable, barred, excluded };

struct EctopicConfig {
  double threshold_fraction = 0.30;
  std::size_t median_window = 11;
};

struct EctopicMask {
  std::vector<IntervalUse> use;  // one entry per interval
  std::size_t excluded_count = 0;
  std::size_t barred_count = 0;
};

/// Flags ectopic beats: a premature interval immediately followed by a
/// compensatory pause, both deviating beyond the threshold fraction from the
/// running median of the preceding intervals. The pair is excluded and its
/// neighbors barred from successive-difference statistics. Symmetric
/// beat-to-beat irregularity, as in atrial fibrillation, does not show this
/// short-then-long signature and passes through mostly untouched.
EctopicMask exclude_ectopic(const BeatSeries& series,
                            const EctopicConfig& config = {});

/// Interval pairs over matched beats: a pair forms where two consecutive
/// detected beats matched two consecutive reference beats, the interval ends
/// in a clean window, and the reference interval is not ectopic-excluded.
PairSet build_pair_set(const MatchResult& result, const BeatSeries& det,
                       const BeatSeries& ref,
                       std::span<const MinuteWindow> clean_windows,
                       const EctopicMask* ref_mask = nullptr,
                       bool include_partial = false);

ErrorStats error_stats(const PairSet& pairs);

/// RMSSD / pNN50 / STD over the usable intervals. The optional usability
/// vector must have one entry per interval; successive differences touching a
/// barred or excluded interval are dropped, the standard deviation skips only
/// excluded ones.
HrvStats hrv_stats(const IntervalView& view,
                   std::span<const IntervalUse> usability = {});

BlandAltmanData bland_altman(const PairSet& pairs);

}  // namespace ibival
