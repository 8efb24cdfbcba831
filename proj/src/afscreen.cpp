#include "ibival/afscreen.hpp"

#include <algorithm>
#include <cmath>

namespace ibival {

namespace {

struct GroupStats {
  double std_ms, rmssd_ms, pnn50_pct;
};

GroupStats group_stats(std::span<const std::int64_t> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (auto x : xs) mean += static_cast<double>(x);
  mean /= n;

  double ss = 0.0;
  for (auto x : xs) {
    const double d = static_cast<double>(x) - mean;
    ss += d * d;
  }

  double sum_d2 = 0.0;
  std::size_t over_50 = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double d = static_cast<double>(xs[i + 1] - xs[i]);
    sum_d2 += d * d;
    if (std::abs(d) > 50.0) ++over_50;
  }
  const double n_diffs = n - 1.0;

  return {std::sqrt(ss / (n - 1.0)), std::sqrt(sum_d2 / n_diffs),
          100.0 * static_cast<double>(over_50) / n_diffs};
}

void check_window(const IntervalView& view, std::size_t stride,
                  std::size_t window_len) {
  if (window_len < 2) throw Error(errc::invalid_config, "window_len must be >= 2");
  if (stride < 1) throw Error(errc::invalid_config, "stride must be >= 1");
  if (view.size() < window_len)
    throw Error(errc::too_short,
                "need at least " + std::to_string(window_len) + " intervals, got " +
                    std::to_string(view.size()));
}

}  // namespace

const char* screen_label_name(ScreenLabel label) {
  switch (label) {
    case ScreenLabel::sr: return "SR";
    case ScreenLabel::af: return "AF";
    case ScreenLabel::mixed: return "Mixed";
  }
  return "?";
}

std::vector<double> rolling_std(const IntervalView& view, std::size_t stride,
                                std::size_t window_len) {
  check_window(view, stride, window_len);
  std::vector<double> out;
  const std::span<const std::int64_t> iv(view.intervals_ms);
  for (std::size_t i = 0; i + window_len <= iv.size(); i += stride)
    out.push_back(group_stats(iv.subspan(i, window_len)).std_ms);
  return out;
}

std::vector<WindowScore> window_features(const IntervalView& view,
                                         std::size_t stride,
                                         std::size_t window_len) {
  check_window(view, stride, window_len);
  std::vector<WindowScore> out;
  const std::span<const std::int64_t> iv(view.intervals_ms);
  for (std::size_t i = 0; i + window_len <= iv.size(); i += stride) {
    const GroupStats g = group_stats(iv.subspan(i, window_len));
    out.push_back(WindowScore{i, g.std_ms, g.rmssd_ms, g.pnn50_pct, false});
  }
  return out;
}

AfScreenResult classify(std::vector<WindowScore> scores, const AfConfig& config) {
  if (scores.empty())
    throw Error(errc::too_short, "classification needs at least one window");

  AfScreenResult r;
  std::size_t af_count = 0;
  for (auto& s : scores) {
    s.af = s.std_ms > config.std_threshold_ms;
    if (s.af) ++af_count;
  }
  r.window_scores = std::move(scores);
  r.fraction_af =
      static_cast<double>(af_count) / static_cast<double>(r.window_scores.size());

  if (r.fraction_af >= config.af_fraction)
    r.overall = ScreenLabel::af;
  else if (r.fraction_af <= config.sr_fraction)
    r.overall = ScreenLabel::sr;
  else
    r.overall = ScreenLabel::mixed;
  return r;
}

AfConfig calibrate_threshold(std::span<const LabeledSeries> runs,
                             const AfConfig& base) {
  std::vector<std::pair<double, bool>> samples;  // (std, is_af)
  bool saw_af = false, saw_sr = false;
  for (const auto& run : runs) {
    if (!run.series) throw Error(errc::invalid_config, "null series in input");
    if (run.rhythm == Rhythm::afib) saw_af = true;
    else if (run.rhythm == Rhythm::sinus) saw_sr = true;
    else continue;
    for (double s : rolling_std(intervals(*run.series), base.stride, base.window_len))
      samples.emplace_back(s, run.rhythm == Rhythm::afib);
  }
  if (!saw_af || !saw_sr)
    throw Error(errc::single_class,
                "calibration needs at least one SR and one AF series");

  double lo = samples.front().first, hi = samples.front().first;
  std::size_t n_af = 0, n_sr = 0;
  for (const auto& [s, af] : samples) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    (af ? n_af : n_sr) += 1;
  }

  // balanced accuracy of "AF iff std > t" scanned at 1 ms over the observed
  // range; the best thresholds form runs, keep the longest (earliest on ties)
  const long t_lo = std::lround(std::floor(lo));
  const long t_hi = std::lround(std::ceil(hi));
  double best_acc = -1.0;
  long run_start = t_lo, run_len = 0;
  long best_start = t_lo, best_len = 0;
  for (long t = t_lo; t <= t_hi; ++t) {
    std::size_t tp = 0, tn = 0;
    for (const auto& [s, af] : samples) {
      const bool pred_af = s > static_cast<double>(t);
      if (af && pred_af) ++tp;
      if (!af && !pred_af) ++tn;
    }
    const double acc = 0.5 * (static_cast<double>(tp) / static_cast<double>(n_af) +
                              static_cast<double>(tn) / static_cast<double>(n_sr));
    if (acc > best_acc) {
      best_acc = acc;
      run_start = t;
      run_len = 1;
      best_start = t;
      best_len = 1;
    } else if (acc == best_acc && run_len > 0 && t == run_start + run_len) {
      ++run_len;
      if (run_len > best_len) {
        best_start = run_start;
        best_len = run_len;
      }
    } else if (acc == best_acc) {
      run_start = t;
      run_len = 1;
    } else {
      run_len = 0;
    }
  }

  AfConfig out = base;
  out.std_threshold_ms =
      static_cast<double>(best_start) + static_cast<double>(best_len - 1) / 2.0;
  return out;
}

}  // namespace ibival
