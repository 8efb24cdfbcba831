#include "ibival/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace ibival {

namespace {

double median_of(std::vector<std::int64_t>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  const std::size_t n = scratch.size();
  if (n % 2 == 1) return static_cast<double>(scratch[n / 2]);
  return (static_cast<double>(scratch[n / 2 - 1]) +
          static_cast<double>(scratch[n / 2])) / 2.0;
}

double sample_std(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

EctopicMask exclude_ectopic(const BeatSeries& series, const EctopicConfig& config) {
  if (config.threshold_fraction <= 0.0 || config.threshold_fraction >= 1.0)
    throw Error(errc::invalid_config, "ectopic threshold must be in (0, 1)");
  if (config.median_window < 1)
    throw Error(errc::invalid_config, "ectopic median window must be >= 1");

  const IntervalView view = intervals(series);
  const auto& iv = view.intervals_ms;
  const std::size_t n = iv.size();

  EctopicMask mask;
  mask.use.assign(n, IntervalUse::usable);

  std::vector<std::int64_t> scratch;
  scratch.reserve(config.median_window);

  auto running_median = [&](std::size_t i) -> double {
    scratch.clear();
    if (i == 0) {
      // no history yet; judge the first interval against the leading stretch
      const std::size_t take = std::min(n, config.median_window);
      for (std::size_t k = 0; k < take; ++k) scratch.push_back(iv[k]);
    } else {
      const std::size_t lo = i > config.median_window ? i - config.median_window : 0;
      for (std::size_t k = lo; k < i; ++k) scratch.push_back(iv[k]);
    }
    return median_of(scratch);
  };

  const double f = config.threshold_fraction;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (mask.use[i] == IntervalUse::excluded) continue;
    const double med = running_median(i);
    const bool premature = static_cast<double>(iv[i]) < (1.0 - f) * med;
    const bool pause = static_cast<double>(iv[i + 1]) > (1.0 + f) * med;
    if (premature && pause) {
      mask.use[i] = IntervalUse::excluded;
      mask.use[i + 1] = IntervalUse::excluded;
      if (i > 0 && mask.use[i - 1] == IntervalUse::usable)
        mask.use[i - 1] = IntervalUse::barred;
      if (i + 2 < n && mask.use[i + 2] == IntervalUse::usable)
        mask.use[i + 2] = IntervalUse::barred;
    }
  }

  for (IntervalUse u : mask.use) {
    if (u == IntervalUse::excluded) ++mask.excluded_count;
    if (u == IntervalUse::barred) ++mask.barred_count;
  }
  return mask;
}

PairSet build_pair_set(const MatchResult& result, const BeatSeries& det,
                       const BeatSeries& ref,
                       std::span<const MinuteWindow> clean_windows,
                       const EctopicMask* ref_mask, bool include_partial) {
  const auto& dts = det.timestamps_ms();
  const auto& rts = ref.timestamps_ms();

  if (ref_mask && ref_mask->use.size() + 1 != rts.size())
    throw Error(errc::invalid_config,
                "ectopic mask does not belong to this reference series");

  // matched detected beat per reference beat
  std::vector<std::size_t> det_of(rts.size(),
                                  std::numeric_limits<std::size_t>::max());
  for (const auto& [rj, dk] : result.pairs) det_of[rj] = dk;

  PairSet set;
  for (std::size_t j = 1; j < rts.size(); ++j) {
    const std::size_t dk = det_of[j];
    const std::size_t dk_prev = det_of[j - 1];
    if (dk == std::numeric_limits<std::size_t>::max() ||
        dk_prev == std::numeric_limits<std::size_t>::max() ||
        dk != dk_prev + 1)
      continue;  // intervals do not span the same beats

    const std::size_t w = window_index_of(clean_windows, rts[j]);
    const bool usable_window =
        clean_windows[w].clean && (include_partial || !clean_windows[w].partial);
    if (!usable_window) {
      ++set.dropped_unclean;
      continue;
    }
    if (ref_mask && ref_mask->use[j - 1] == IntervalUse::excluded) {
      ++set.dropped_ectopic;
      continue;
    }

    set.pairs.push_back(PairSample{rts[j] - rts[j - 1], dts[dk] - dts[dk - 1],
                                   rts[j], w});
  }
  return set;
}

ErrorStats error_stats(const PairSet& set) {
  if (set.pairs.empty())
    throw Error(errc::empty_pair_set, "no interval pairs to score");

  double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0, sum_rel = 0.0;
  for (const auto& p : set.pairs) {
    const double e = static_cast<double>(p.ibi_ms - p.rri_ms);
    sum += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
    sum_rel += std::abs(e) / static_cast<double>(p.rri_ms);
  }
  const double n = static_cast<double>(set.pairs.size());

  ErrorStats s;
  s.n_pairs = set.pairs.size();
  s.me_ms = sum / n;
  s.mae_ms = sum_abs / n;
  s.rmse_ms = std::sqrt(sum_sq / n);
  s.mape_pct = 100.0 * sum_rel / n;
  return s;
}

HrvStats hrv_stats(const IntervalView& view,
                   std::span<const IntervalUse> usability) {
  const auto& iv = view.intervals_ms;
  if (!usability.empty() && usability.size() != iv.size())
    throw Error(errc::invalid_config,
                "usability mask does not match the interval count");

  auto use_of = [&](std::size_t i) {
    return usability.empty() ? IntervalUse::usable : usability[i];
  };

  std::vector<double> kept;
  kept.reserve(iv.size());
  for (std::size_t i = 0; i < iv.size(); ++i)
    if (use_of(i) != IntervalUse::excluded)
      kept.push_back(static_cast<double>(iv[i]));

  if (kept.size() < 2)
    throw Error(errc::too_short, "need at least 2 usable intervals");

  double sum_d2 = 0.0;
  std::size_t n_diffs = 0, over_50 = 0;
  for (std::size_t i = 0; i + 1 < iv.size(); ++i) {
    if (use_of(i) != IntervalUse::usable || use_of(i + 1) != IntervalUse::usable)
      continue;
    const double d = static_cast<double>(iv[i + 1] - iv[i]);
    sum_d2 += d * d;
    ++n_diffs;
    if (std::abs(d) > 50.0) ++over_50;
  }

  HrvStats s;
  s.n_intervals = kept.size();
  s.std_ms = sample_std(kept);
  if (n_diffs > 0) {
    s.rmssd_ms = std::sqrt(sum_d2 / static_cast<double>(n_diffs));
    s.pnn50_pct = 100.0 * static_cast<double>(over_50) /
                  static_cast<double>(n_diffs);
  }
  return s;
}

BlandAltmanData bland_altman(const PairSet& set) {
  if (set.pairs.size() < 2)
    throw Error(errc::empty_pair_set,
                "Bland-Altman needs at least 2 interval pairs");

  BlandAltmanData ba;
  ba.points.reserve(set.pairs.size());
  double sum_diff = 0.0;
  for (const auto& p : set.pairs) {
    const double mean =
        (static_cast<double>(p.rri_ms) + static_cast<double>(p.ibi_ms)) / 2.0;
    const double diff = static_cast<double>(p.ibi_ms - p.rri_ms);
    ba.points.emplace_back(mean, diff);
    sum_diff += diff;
  }
  const double n = static_cast<double>(ba.points.size());
  ba.bias_ms = sum_diff / n;

  double ss = 0.0;
  for (const auto& [mean, diff] : ba.points)
    ss += (diff - ba.bias_ms) * (diff - ba.bias_ms);
  ba.sd_ms = std::sqrt(ss / (n - 1.0));
  ba.loa_low_ms = ba.bias_ms - 1.96 * ba.sd_ms;
  ba.loa_high_ms = ba.bias_ms + 1.96 * ba.sd_ms;
  return ba;
}

}  // namespace ibival
