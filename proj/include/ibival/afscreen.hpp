#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ibival/types.hpp"

namespace ibival {

enum class ScreenLabel { sr, af, mixed };

const char* screen_label_name(ScreenLabel label);

struct AfConfig {
  double std_threshold_ms = 100.0;  // window labeled AF above this
  double af_fraction = 0.5;         // overall AF at or above this AF-window share
  double sr_fraction = 0.1;         // overall SR at or below this share
  std::size_t window_len = 20;
  std::size_t stride = 1;           // 20 gives non-overlapping groups
};

struct WindowScore {
  std::size_t start_index = 0;
  double std_ms = 0.0;
  double rmssd_ms = 0.0;
  double pnn50_pct = 0.0;
  bool af = false;
};

struct AfScreenResult {
  std::vector<WindowScore> window_scores;
  double fraction_af = 0.0;
  ScreenLabel overall = ScreenLabel::sr;
};

/// Sample standard deviation over each group of window_len consecutive
/// intervals, advancing by stride.
std::vector<double> rolling_std(const IntervalView& view, std::size_t stride = 1,
                                std::size_t window_len = 20);

/// Per-group variability features (std, rmssd, pnn50), labels unset.
std::vector<WindowScore> window_features(const IntervalView& view,
                                         std::size_t stride = 1,
                                         std::size_t window_len = 20);

/// Labels each group AF when its std exceeds the threshold, then derives the
/// overall label from the AF-window fraction.
AfScreenResult classify(std::vector<WindowScore> scores, const AfConfig& config);

struct LabeledSeries {
  const BeatSeries* series = nullptr;
  Rhythm rhythm = Rhythm::unknown;
};

/// Deterministic 1 ms scan over the observed rolling-std range, maximizing
/// balanced accuracy against the window labels implied by each series'
/// rhythm. Returns the midpoint of the best contiguous run of thresholds, so
/// perfectly separated classes give the middle of the gap.
AfConfig calibrate_threshold(std::span<const LabeledSeries> runs,
                             const AfConfig& base = {});

}  // namespace ibival
