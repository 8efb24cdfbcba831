#include "ibival/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ibival {

namespace {

// The search works in the correction direction (device -> reference):
//
//   r_hat = s * (d - anchor) + anchor + o
//
// with the anchor at the middle of the detected series. Anchoring there
// decouples slope from offset: a slope error tilts residuals symmetrically
// around the anchor, so the best offset barely moves while the slope grid is
// scanned. The returned ClockMap is the inverse, normalized back to a zero
// anchor.
struct Candidate {
  double slope = 1.0;   // correction slope s
  double offset = 0.0;  // correction offset o
  double value = std::numeric_limits<double>::infinity();
  std::size_t paired = 0;
};

// Objective for one candidate: mean distance from each (corrected) detected
// beat to its nearest reference beat, charging the pairing cap for beats with
// no reference neighbor in range.
struct Pairing {
  double value;
  std::size_t paired;
};

Pairing evaluate(std::span<const double> det_scaled, double offset,
                 std::span<const double> ref, double cap) {
  if (ref.empty() || det_scaled.empty()) return {cap, 0};
  double total = 0.0;
  std::size_t paired = 0;
  std::size_t j = 0;
  for (double ds : det_scaled) {
    const double m = ds + offset;
    while (j + 1 < ref.size() &&
           std::abs(ref[j + 1] - m) <= std::abs(ref[j] - m))
      ++j;
    const double dist = std::abs(ref[j] - m);
    if (dist <= cap) {
      total += dist;
      ++paired;
    } else {
      total += cap;
    }
  }
  return {total / static_cast<double>(det_scaled.size()), paired};
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value < b.value;
  if (std::abs(a.offset) != std::abs(b.offset))
    return std::abs(a.offset) < std::abs(b.offset);
  return std::abs(a.slope - 1.0) < std::abs(b.slope - 1.0);
}

void check_search(const SearchConfig& s) {
  const bool ok = s.offset_range_ms >= 0 && s.offset_coarse_step_ms > 0 &&
                  s.offset_fine_range_ms >= 0 && s.offset_fine_step_ms > 0 &&
                  s.slope_range_ppm >= 0 && s.slope_coarse_step_ppm > 0 &&
                  s.slope_fine_range_ppm >= 0 && s.slope_fine_step_ppm > 0 &&
                  s.pairing_cap_ms > 0 && s.coarse_stride >= 1 &&
                  s.window_offset_range_ms >= 0 && s.window_offset_step_ms > 0;
  if (!ok) throw Error(errc::degenerate_search, "empty or invalid search grid");
}

std::vector<double> to_double(const std::vector<std::int64_t>& v) {
  return std::vector<double>(v.begin(), v.end());
}

void scale_det(std::span<const double> det, double anchor, double slope,
               std::vector<double>& out) {
  out.resize(det.size());
  for (std::size_t i = 0; i < det.size(); ++i)
    out[i] = slope * (det[i] - anchor) + anchor;
}

struct SearchState {
  std::span<const double> ref;
  double anchor;
  double cap;
  std::size_t evaluations = 0;
  Candidate best;  // best among full-resolution evaluations only
};

// Scans offsets for one slope; updates best. det must already be scaled.
void scan_offsets(SearchState& st, std::span<const double> det_scaled,
                  double slope, double center, double range, double step,
                  double clamp_range) {
  const long k_max = std::lround(std::floor(range / step));
  for (long k = -k_max; k <= k_max; ++k) {
    const double o = center + static_cast<double>(k) * step;
    if (std::abs(o) > clamp_range + 1e-9) continue;
    const Pairing p = evaluate(det_scaled, o, st.ref, st.cap);
    ++st.evaluations;
    Candidate c{slope, o, p.value, p.paired};
    if (better(c, st.best)) st.best = c;
  }
}

}  // namespace

GlobalAlignment estimate_global_alignment(const BeatSeries& det,
                                          const BeatSeries& ref,
                                          const SearchConfig& search) {
  check_search(search);

  const std::vector<double> det_full = to_double(det.timestamps_ms());
  const std::vector<double> ref_times = to_double(ref.timestamps_ms());

  std::vector<double> det_sub;
  const std::size_t stride = std::max<std::size_t>(1, search.coarse_stride);
  for (std::size_t i = 0; i < det_full.size(); i += stride)
    det_sub.push_back(det_full[i]);

  const double anchor = (det_full.front() + det_full.back()) / 2.0;
  const double half_span = (det_full.back() - det_full.front()) / 2.0;
  const double cap = search.pairing_cap_ms;

  SearchState coarse{ref_times, anchor, cap, 0, {}};
  std::vector<double> scaled;

  // Stage 1: offsets at unit slope, strided beats.
  scale_det(det_sub, anchor, 1.0, scaled);
  scan_offsets(coarse, scaled, 1.0, 0.0, search.offset_range_ms,
               search.offset_coarse_step_ms, search.offset_range_ms);
  const Candidate stage1 = coarse.best;

  // Stage 2: joint slope x offset around the stage-1 offset. Thanks to the
  // mid-series anchor a slope error of E ppm moves the best offset by at most
  // E * half_span, so the local window below is sufficient.
  const double slope_range = search.slope_range_ppm * 1e-6;
  const double ppm = 1e-6;
  const double local_range =
      slope_range * half_span + 2.0 * search.offset_coarse_step_ms;
  const long s_max =
      std::lround(std::floor(search.slope_range_ppm / search.slope_coarse_step_ppm));
  for (long ks = -s_max; ks <= s_max; ++ks) {
    const double s = 1.0 + static_cast<double>(ks) * search.slope_coarse_step_ppm * ppm;
    scale_det(det_sub, anchor, s, scaled);
    scan_offsets(coarse, scaled, s, stage1.offset, local_range,
                 search.offset_coarse_step_ms, search.offset_range_ms);
  }
  const Candidate stage2 = coarse.best;

  // Fine stages run at full resolution; the identity candidate keeps the
  // alignment objective from ever ending worse than it started.
  SearchState fine{ref_times, anchor, cap, coarse.evaluations, {}};
  scale_det(det_full, anchor, 1.0, scaled);
  const Pairing before = evaluate(scaled, 0.0, ref_times, cap);
  ++fine.evaluations;
  fine.best = Candidate{1.0, 0.0, before.value, before.paired};

  // Stage 3: fine offsets at the coarse slope.
  scale_det(det_full, anchor, stage2.slope, scaled);
  scan_offsets(fine, scaled, stage2.slope, stage2.offset,
               search.offset_fine_range_ms, search.offset_fine_step_ms,
               search.offset_range_ms);

  // Stage 4: fine slopes at the stage-3 offset.
  const double o3 = fine.best.offset;
  const long f_max =
      std::lround(std::floor(search.slope_fine_range_ppm / search.slope_fine_step_ppm));
  for (long ks = -f_max; ks <= f_max; ++ks) {
    const double s =
        stage2.slope + static_cast<double>(ks) * search.slope_fine_step_ppm * ppm;
    if (std::abs(s - 1.0) > slope_range + 1e-12) continue;
    scale_det(det_full, anchor, s, scaled);
    const Pairing p = evaluate(scaled, o3, ref_times, cap);
    ++fine.evaluations;
    Candidate c{s, o3, p.value, p.paired};
    if (better(c, fine.best)) fine.best = c;
  }

  // Stage 5: small joint polish around the current best.
  const Candidate pivot = fine.best;
  for (long ks = -5; ks <= 5; ++ks) {
    const double s =
        pivot.slope + static_cast<double>(ks) * search.slope_fine_step_ppm * ppm;
    if (std::abs(s - 1.0) > slope_range + 1e-12) continue;
    scale_det(det_full, anchor, s, scaled);
    scan_offsets(fine, scaled, s, pivot.offset,
                 10.0 * search.offset_fine_step_ms, search.offset_fine_step_ms,
                 search.offset_range_ms);
  }

  if (fine.best.paired == 0)
    throw Error(errc::no_overlap,
                "series never overlap within the configured search range");

  // Correction (s, o) found; report the forward device model with the anchor
  // folded away: r = s*(d - a) + a + o  inverts to  d = slope*r + offset.
  const double s = fine.best.slope;
  const double o = fine.best.offset;
  GlobalAlignment out;
  out.map.slope = 1.0 / s;
  out.map.offset_ms = (anchor * (s - 1.0) - o) / s;
  out.report.before_mae_ms = before.value;
  out.report.before_paired = before.paired;
  out.report.after_mae_ms = fine.best.value;
  out.report.after_paired = fine.best.paired;
  out.report.evaluations = fine.evaluations;
  return out;
}

GlobalAlignment refine_per_window(const BeatSeries& det, const BeatSeries& ref,
                                  const ClockMap& global_map,
                                  std::span<const MinuteWindow> wins,
                                  const SearchConfig& search) {
  check_search(search);
  if (wins.empty())
    throw Error(errc::invalid_config, "refine_per_window needs a window tiling");

  const double S = global_map.slope;
  const double O = global_map.offset_ms;
  const std::vector<double> ref_times = to_double(ref.timestamps_ms());
  const std::int64_t win_len = wins.front().end_ms - wins.front().start_ms;
  const double win_start = static_cast<double>(wins.front().start_ms);

  // globally corrected detected beats, grouped by window
  std::vector<std::vector<double>> by_window(wins.size());
  for (std::int64_t d : det.timestamps_ms()) {
    const double r0 = (static_cast<double>(d) - O) / S;
    double idx = std::floor((r0 - win_start) / static_cast<double>(win_len));
    idx = std::clamp(idx, 0.0, static_cast<double>(wins.size() - 1));
    by_window[static_cast<std::size_t>(idx)].push_back(r0);
  }

  const double cap = search.pairing_cap_ms;
  const long w_max = std::lround(
      std::floor(search.window_offset_range_ms / search.window_offset_step_ms));

  GlobalAlignment out;
  out.map = ClockMap{global_map.slope, global_map.offset_ms, {},
                     wins.front().start_ms, win_len};
  out.map.per_window_offset_ms.assign(wins.size(), 0.0);
  out.report.window_before_mae_ms.assign(wins.size(), 0.0);
  out.report.window_after_mae_ms.assign(wins.size(), 0.0);

  std::vector<bool> resolved(wins.size(), false);
  std::size_t evaluations = 0;

  // Each window only ever pairs with reference beats in a bounded
  // neighborhood, so candidate scans run against a local slice.
  const double slack = cap + search.window_offset_range_ms + 1.0;

  for (std::size_t w = 0; w < wins.size(); ++w) {
    const auto& beats = by_window[w];
    if (beats.empty()) continue;

    const double lo = beats.front() - slack;
    const double hi = beats.back() + slack;
    const auto first =
        std::lower_bound(ref_times.begin(), ref_times.end(), lo);
    const auto last = std::upper_bound(first, ref_times.end(), hi);
    const std::span<const double> ref_local =
        std::span<const double>(ref_times).subspan(
            static_cast<std::size_t>(first - ref_times.begin()),
            static_cast<std::size_t>(last - first));

    Candidate best;
    Pairing at_zero{cap, 0};
    for (long k = -w_max; k <= w_max; ++k) {
      const double off = static_cast<double>(k) * search.window_offset_step_ms;
      // correction is r = r0 - off, i.e. evaluate at -off
      const Pairing p = evaluate(beats, -off, ref_local, cap);
      ++evaluations;
      if (k == 0) at_zero = p;
      Candidate c{1.0, off, p.value, p.paired};
      if (better(c, best)) best = c;
    }

    out.report.window_before_mae_ms[w] = at_zero.value;
    if (best.paired >= search.min_window_matches) {
      out.map.per_window_offset_ms[w] = best.offset;
      out.report.window_after_mae_ms[w] = best.value;
      resolved[w] = true;
    } else {
      out.report.window_after_mae_ms[w] = at_zero.value;
    }
  }

  // sparse windows inherit: previous resolved offset, else the next one
  double carry = 0.0;
  bool have_carry = false;
  for (std::size_t w = 0; w < wins.size(); ++w) {
    if (resolved[w]) {
      carry = out.map.per_window_offset_ms[w];
      have_carry = true;
    } else if (have_carry) {
      out.map.per_window_offset_ms[w] = carry;
    }
  }
  for (std::size_t w = wins.size(); w-- > 0;) {
    if (resolved[w]) {
      carry = out.map.per_window_offset_ms[w];
      have_carry = true;
    } else if (have_carry) {
      out.map.per_window_offset_ms[w] = carry;
    } else {
      out.map.per_window_offset_ms[w] = 0.0;
    }
  }

  out.report.evaluations = evaluations;

  // overall before/after across windows with beats
  double sum_before = 0.0, sum_after = 0.0;
  std::size_t counted = 0, paired_after = 0, paired_before = 0;
  for (std::size_t w = 0; w < wins.size(); ++w) {
    if (by_window[w].empty()) continue;
    const Pairing b = evaluate(by_window[w], 0.0, ref_times, cap);
    const Pairing p = evaluate(by_window[w], -out.map.per_window_offset_ms[w],
                               ref_times, cap);
    out.report.window_after_mae_ms[w] = p.value;
    sum_before += b.value * by_window[w].size();
    sum_after += p.value * by_window[w].size();
    paired_before += b.paired;
    paired_after += p.paired;
    counted += by_window[w].size();
  }
  if (counted > 0) {
    out.report.before_mae_ms = sum_before / static_cast<double>(counted);
    out.report.after_mae_ms = sum_after / static_cast<double>(counted);
    out.report.before_paired = paired_before;
    out.report.after_paired = paired_after;
  }
  return out;
}

namespace {

BeatSeries transform(const ClockMap& map, const BeatSeries& series, bool forward,
                     const ValidationLimits& limits) {
  const double S = map.slope;
  const double O = map.offset_ms;
  const double len = static_cast<double>(map.window_len_ms);
  const double start = static_cast<double>(map.windows_start_ms);
  const std::size_t n_win = map.per_window_offset_ms.size();

  auto window_offset = [&](double ref_time) -> double {
    if (n_win == 0) return 0.0;
    double idx = std::floor((ref_time - start) / len);
    idx = std::clamp(idx, 0.0, static_cast<double>(n_win - 1));
    return map.per_window_offset_ms[static_cast<std::size_t>(idx)];
  };

  std::vector<std::int64_t> mapped;
  mapped.reserve(series.size());
  for (std::int64_t t : series.timestamps_ms()) {
    double out;
    if (forward) {
      // input is on the reference timeline
      const double td = static_cast<double>(t);
      out = S * td + O + window_offset(td);
    } else {
      const double r0 = (static_cast<double>(t) - O) / S;
      out = r0 - window_offset(r0) / S;
    }
    mapped.push_back(std::llround(out));
  }

  try {
    return validate_series(std::move(mapped), series.source(), limits,
                           series.subject_id(), series.rhythm_label());
  } catch (const Error& e) {
    if (e.code() == errc::non_monotonic)
      throw Error(errc::non_monotonic,
                  std::string("clock map reorders beats: ") + e.what());
    throw;
  }
}

}  // namespace

BeatSeries apply(const ClockMap& map, const BeatSeries& series,
                 const ValidationLimits& limits) {
  return transform(map, series, /*forward=*/true, limits);
}

BeatSeries align(const ClockMap& map, const BeatSeries& det,
                 const ValidationLimits& limits) {
  return transform(map, det, /*forward=*/false, limits);
}

}  // namespace ibival
