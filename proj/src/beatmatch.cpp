#include "ibival/beatmatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace ibival {

namespace {

// interval associated with detected beat k: the one ending there, except the
// first beat which borrows the following interval
std::int64_t beat_interval(const std::vector<std::int64_t>& ts, std::size_t k) {
  return k == 0 ? ts[1] - ts[0] : ts[k] - ts[k - 1];
}

}  // namespace

MatchResult match(const BeatSeries& det, const BeatSeries& ref,
                  std::span<const MinuteWindow> wins) {
  const auto& dts = det.timestamps_ms();
  const auto& rts = ref.timestamps_ms();

  MatchResult result;
  result.counts.total_det = dts.size();
  result.counts.total_ref = rts.size();

  std::vector<bool> claimed(rts.size(), false);
  std::vector<std::size_t> det_claim(dts.size(),
                                     std::numeric_limits<std::size_t>::max());

  double nearest_sum = 0.0;
  std::size_t search_from = 0;

  for (std::size_t k = 0; k < dts.size(); ++k) {
    const std::int64_t t = dts[k];
    const std::int64_t l = beat_interval(dts, k);
    // candidate window [t - l/2, t + l/2], kept exact in doubled coordinates
    const std::int64_t lo2 = 2 * t - l;
    const std::int64_t hi2 = 2 * t + l;

    while (search_from < rts.size() && 2 * rts[search_from] < lo2) ++search_from;

    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::int64_t best_dist = std::numeric_limits<std::int64_t>::max();
    for (std::size_t j = search_from; j < rts.size() && 2 * rts[j] <= hi2; ++j) {
      if (claimed[j]) continue;
      const std::int64_t dist = std::abs(rts[j] - t);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best != std::numeric_limits<std::size_t>::max()) {
      claimed[best] = true;
      det_claim[k] = best;
      result.pairs.emplace_back(best, k);
      ++result.counts.correct;
    } else {
      result.extra_det_indices.push_back(k);
      ++result.counts.extra;
    }

    // unsynchronized-input heuristic: plain nearest distance, no window rule
    const auto it = std::lower_bound(rts.begin(), rts.end(), t);
    std::int64_t nd = std::numeric_limits<std::int64_t>::max();
    if (it != rts.end()) nd = std::min(nd, std::abs(*it - t));
    if (it != rts.begin()) nd = std::min(nd, std::abs(*(it - 1) - t));
    nearest_sum += static_cast<double>(nd);
  }

  for (std::size_t j = 0; j < rts.size(); ++j) {
    if (!claimed[j]) {
      result.missing_ref_indices.push_back(j);
      ++result.counts.missing;
    }
  }

  result.nearest_pair_mae_ms = nearest_sum / static_cast<double>(dts.size());
  result.alignment_warning = result.nearest_pair_mae_ms > 200.0;

  if (!wins.empty()) {
    result.per_window.assign(wins.size(), MatchCounts{});
    for (std::size_t j = 0; j < rts.size(); ++j) {
      auto& c = result.per_window[window_index_of(wins, rts[j])];
      ++c.total_ref;
      if (claimed[j]) ++c.correct; else ++c.missing;
    }
    for (std::size_t k = 0; k < dts.size(); ++k) {
      auto& c = result.per_window[window_index_of(wins, dts[k])];
      ++c.total_det;
      if (det_claim[k] == std::numeric_limits<std::size_t>::max()) ++c.extra;
    }
  }

  return result;
}

DetectionSummary summarize(const MatchResult& result) {
  const auto& c = result.counts;
  if (c.total_ref == 0 || c.total_det == 0)
    throw Error(errc::empty_series, "summary needs beats on both sides");

  DetectionSummary s;
  s.counts = c;
  s.correct_pct = 100.0 * static_cast<double>(c.correct) /
                  static_cast<double>(c.total_ref);
  s.missing_pct = 100.0 * static_cast<double>(c.missing) /
                  static_cast<double>(c.total_ref);
  s.extra_pct = 100.0 * static_cast<double>(c.extra) /
                static_cast<double>(c.total_det);
  return s;
}

std::vector<MinuteWindow> mark_clean_windows(const MatchResult& result,
                                             std::span<const MinuteWindow> wins) {
  if (result.per_window.size() != wins.size())
    throw Error(errc::invalid_config,
                "match() was not run with this window tiling");

  std::vector<MinuteWindow> out(wins.begin(), wins.end());
  for (std::size_t w = 0; w < out.size(); ++w) {
    const auto& c = result.per_window[w];
    out[w].clean = (c.extra == 0 && c.missing == 0);
  }
  return out;
}

}  // namespace ibival
