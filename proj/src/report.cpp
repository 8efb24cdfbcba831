#include "ibival/report.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <sstream>

namespace ibival {

namespace {

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// interval usability for one series: clean-window membership merged with the
// series' own ectopic mask
HrvInput hrv_input_for(const BeatSeries& series,
                       std::span<const MinuteWindow> wins,
                       const EctopicConfig& ectopic, bool include_partial) {
  HrvInput input;
  input.view = intervals(series);
  const EctopicMask mask = exclude_ectopic(series, ectopic);

  input.usability = mask.use;
  for (std::size_t i = 0; i < input.view.size(); ++i) {
    const std::size_t w = window_index_of(wins, input.view.end_timestamps_ms[i]);
    const bool ok = wins[w].clean && (include_partial || !wins[w].partial);
    if (!ok) input.usability[i] = IntervalUse::excluded;
  }
  return input;
}

template <typename F>
auto try_stat(F&& f) -> std::optional<decltype(f())> {
  try {
    return f();
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

RecordingReport evaluate_pair(const BeatSeries& det, const BeatSeries& ref,
                              const PipelineConfig& config, std::string id) {
  RecordingReport rec;
  rec.id = id.empty() ? det.subject_id() : std::move(id);

  const GlobalAlignment global =
      estimate_global_alignment(det, ref, config.search);
  const std::vector<MinuteWindow> wins = windows(ref, config.window_len_ms);
  const GlobalAlignment refined =
      refine_per_window(det, ref, global.map, wins, config.search);
  rec.map = refined.map;

  rec.sync = refined.report;
  rec.sync.before_mae_ms = global.report.before_mae_ms;
  rec.sync.before_paired = global.report.before_paired;
  rec.sync.evaluations = global.report.evaluations + refined.report.evaluations;

  BeatSeries aligned = align(refined.map, det, config.det_limits);
  const auto cap = static_cast<std::int64_t>(config.search.pairing_cap_ms);
  aligned = crop(aligned, ref.front_ms() - cap, ref.back_ms() + cap);

  const MatchResult mres = match(aligned, ref, wins);
  rec.detection = summarize(mres);

  const std::vector<MinuteWindow> marked = mark_clean_windows(mres, wins);
  rec.window_summary.total = marked.size();
  for (const auto& w : marked) {
    if (w.clean) ++rec.window_summary.clean;
    if (w.partial) ++rec.window_summary.partial;
  }

  const EctopicMask ref_mask = exclude_ectopic(ref, config.ectopic);
  rec.pair_set = build_pair_set(mres, aligned, ref, marked, &ref_mask,
                                config.include_partial);

  rec.errors = try_stat([&] { return error_stats(rec.pair_set); });
  rec.bland_altman = try_stat([&] { return bland_altman(rec.pair_set); });

  rec.device_hrv_input =
      hrv_input_for(aligned, marked, config.ectopic, config.include_partial);
  rec.reference_hrv_input =
      hrv_input_for(ref, marked, config.ectopic, config.include_partial);
  rec.hrv_device = try_stat(
      [&] { return hrv_stats(rec.device_hrv_input.view, rec.device_hrv_input.usability); });
  rec.hrv_reference = try_stat([&] {
    return hrv_stats(rec.reference_hrv_input.view, rec.reference_hrv_input.usability);
  });

  rec.af_screen = try_stat([&] {
    return classify(window_features(intervals(det), config.af.stride,
                                    config.af.window_len),
                    config.af);
  });
  return rec;
}

namespace {

void append_hrv_input(HrvInput& pool, const HrvInput& part) {
  if (!pool.view.intervals_ms.empty()) {
    // sentinel so no successive difference spans two recordings
    pool.view.intervals_ms.push_back(0);
    pool.view.end_timestamps_ms.push_back(0);
    pool.usability.push_back(IntervalUse::excluded);
  }
  pool.view.intervals_ms.insert(pool.view.intervals_ms.end(),
                                part.view.intervals_ms.begin(),
                                part.view.intervals_ms.end());
  pool.view.end_timestamps_ms.insert(pool.view.end_timestamps_ms.end(),
                                     part.view.end_timestamps_ms.begin(),
                                     part.view.end_timestamps_ms.end());
  pool.usability.insert(pool.usability.end(), part.usability.begin(),
                        part.usability.end());
}

GroupReport build_group(const std::vector<RecordingReport>& recs) {
  GroupReport g;
  if (recs.empty()) return g;

  // pooled detection counts
  MatchCounts counts;
  for (const auto& r : recs) {
    counts.total_ref += r.detection.counts.total_ref;
    counts.total_det += r.detection.counts.total_det;
    counts.correct += r.detection.counts.correct;
    counts.extra += r.detection.counts.extra;
    counts.missing += r.detection.counts.missing;
  }
  MatchResult pooled_result;
  pooled_result.counts = counts;
  g.detection = summarize(pooled_result);

  // pooled interval pairs, scored by the same module functions
  PairSet all_pairs;
  for (const auto& r : recs) {
    all_pairs.pairs.insert(all_pairs.pairs.end(), r.pair_set.pairs.begin(),
                           r.pair_set.pairs.end());
    all_pairs.dropped_unclean += r.pair_set.dropped_unclean;
    all_pairs.dropped_ectopic += r.pair_set.dropped_ectopic;
  }
  if (!all_pairs.pairs.empty()) {
    g.errors = error_stats(all_pairs);
    if (all_pairs.pairs.size() >= 2) g.bland_altman = bland_altman(all_pairs);
  }

  // pooled HRV over concatenated usable intervals
  HrvInput dev_pool, ref_pool;
  for (const auto& r : recs) {
    append_hrv_input(dev_pool, r.device_hrv_input);
    append_hrv_input(ref_pool, r.reference_hrv_input);
  }
  if (!dev_pool.view.intervals_ms.empty()) {
    try {
      g.hrv_device_pooled = hrv_stats(dev_pool.view, dev_pool.usability);
    } catch (const Error&) {}
    try {
      g.hrv_reference_pooled = hrv_stats(ref_pool.view, ref_pool.usability);
    } catch (const Error&) {}
  }

  // per-recording means, the other aggregation convention
  auto mean_of = [&](auto member) -> std::optional<HrvStats> {
    HrvStats acc;
    std::size_t n = 0;
    for (const auto& r : recs) {
      const std::optional<HrvStats>& h = r.*member;
      if (!h) continue;
      acc.rmssd_ms += h->rmssd_ms;
      acc.pnn50_pct += h->pnn50_pct;
      acc.std_ms += h->std_ms;
      acc.n_intervals += h->n_intervals;
      ++n;
    }
    if (n == 0) return std::nullopt;
    acc.rmssd_ms /= static_cast<double>(n);
    acc.pnn50_pct /= static_cast<double>(n);
    acc.std_ms /= static_cast<double>(n);
    return acc;
  };
  g.hrv_device_mean = mean_of(&RecordingReport::hrv_device);
  g.hrv_reference_mean = mean_of(&RecordingReport::hrv_reference);
  return g;
}

}  // namespace

EvaluationReport evaluate_batch(
    const std::vector<std::pair<BeatSeries, BeatSeries>>& pairs,
    const PipelineConfig& config, unsigned jobs) {
  EvaluationReport report;
  report.recordings.resize(pairs.size());

  if (jobs <= 1 || pairs.size() <= 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
      report.recordings[i] =
          evaluate_pair(pairs[i].first, pairs[i].second, config);
  } else {
    std::vector<std::future<RecordingReport>> futures(pairs.size());
    std::size_t next = 0;
    while (next < pairs.size()) {
      const std::size_t batch =
          std::min<std::size_t>(jobs, pairs.size() - next);
      for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t i = next + k;
        futures[i] = std::async(std::launch::async, [&pairs, &config, i] {
          return evaluate_pair(pairs[i].first, pairs[i].second, config);
        });
      }
      for (std::size_t k = 0; k < batch; ++k)
        report.recordings[next + k] = futures[next + k].get();
      next += batch;
    }
  }

  report.group = build_group(report.recordings);
  return report;
}

namespace {

nlohmann::json counts_json(const DetectionSummary& d) {
  return {{"total_ref", d.counts.total_ref},
          {"total_det", d.counts.total_det},
          {"correct", d.counts.correct},
          {"extra", d.counts.extra},
          {"missing", d.counts.missing},
          {"correct_pct", d.correct_pct},
          {"extra_pct", d.extra_pct},
          {"missing_pct", d.missing_pct}};
}

nlohmann::json errors_json(const ErrorStats& e) {
  return {{"me_ms", e.me_ms},
          {"mae_ms", e.mae_ms},
          {"mape_pct", e.mape_pct},
          {"rmse_ms", e.rmse_ms},
          {"n_pairs", e.n_pairs}};
}

nlohmann::json hrv_json(const HrvStats& h) {
  return {{"rmssd_ms", h.rmssd_ms},
          {"pnn50_pct", h.pnn50_pct},
          {"std_ms", h.std_ms},
          {"n_intervals", h.n_intervals}};
}

nlohmann::json ba_json(const BlandAltmanData& ba) {
  return {{"bias_ms", ba.bias_ms},
          {"sd_ms", ba.sd_ms},
          {"loa_low_ms", ba.loa_low_ms},
          {"loa_high_ms", ba.loa_high_ms},
          {"n_points", ba.points.size()}};
}

nlohmann::json af_json(const AfScreenResult& af) {
  return {{"fraction_af", af.fraction_af},
          {"overall", screen_label_name(af.overall)},
          {"n_windows", af.window_scores.size()}};
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : report.recordings) {
    nlohmann::json j;
    j["id"] = r.id;
    j["detection"] = counts_json(r.detection);
    j["sync"] = {{"slope", r.map.slope},
                 {"offset_ms", r.map.offset_ms},
                 {"before_mae_ms", r.sync.before_mae_ms},
                 {"after_mae_ms", r.sync.after_mae_ms},
                 {"evaluations", r.sync.evaluations}};
    j["windows"] = {{"total", r.window_summary.total},
                    {"clean", r.window_summary.clean},
                    {"partial", r.window_summary.partial}};
    j["pairs"] = {{"n", r.pair_set.size()},
                  {"dropped_unclean", r.pair_set.dropped_unclean},
                  {"dropped_ectopic", r.pair_set.dropped_ectopic}};
    if (r.errors) j["errors"] = errors_json(*r.errors);
    if (r.bland_altman) j["bland_altman"] = ba_json(*r.bland_altman);
    if (r.hrv_device) j["hrv_device"] = hrv_json(*r.hrv_device);
    if (r.hrv_reference) j["hrv_reference"] = hrv_json(*r.hrv_reference);
    if (r.af_screen) j["af_screen"] = af_json(*r.af_screen);
    recs.push_back(std::move(j));
  }

  nlohmann::json group;
  if (report.group.detection) group["detection"] = counts_json(*report.group.detection);
  if (report.group.errors) group["errors"] = errors_json(*report.group.errors);
  if (report.group.bland_altman)
    group["bland_altman"] = ba_json(*report.group.bland_altman);
  if (report.group.hrv_device_pooled)
    group["hrv_device_pooled"] = hrv_json(*report.group.hrv_device_pooled);
  if (report.group.hrv_reference_pooled)
    group["hrv_reference_pooled"] = hrv_json(*report.group.hrv_reference_pooled);
  if (report.group.hrv_device_mean)
    group["hrv_device_mean"] = hrv_json(*report.group.hrv_device_mean);
  if (report.group.hrv_reference_mean)
    group["hrv_reference_mean"] = hrv_json(*report.group.hrv_reference_mean);

  return {{"recordings", std::move(recs)}, {"group", std::move(group)}};
}

std::string render_text(const EvaluationReport& report) {
  std::ostringstream out;

  auto detection_block = [&](const DetectionSummary& d) {
    out << "  Beat detection\n"
        << "    Total beats (ref)   " << d.counts.total_ref << "\n"
        << "    Total beats (dev)   " << d.counts.total_det << "\n"
        << "    Correct beats [%]   " << fmt2(d.correct_pct) << "\n"
        << "    Extra beats [%]     " << fmt2(d.extra_pct) << "\n"
        << "    Missing beats [%]   " << fmt2(d.missing_pct) << "\n";
  };
  auto errors_block = [&](const ErrorStats& e) {
    out << "  Interval estimation (" << e.n_pairs << " pairs)\n"
        << "    ME [ms]    " << fmt2(e.me_ms) << "\n"
        << "    MAE [ms]   " << fmt2(e.mae_ms) << "\n"
        << "    MAPE [%]   " << fmt2(e.mape_pct) << "\n"
        << "    RMSE [ms]  " << fmt2(e.rmse_ms) << "\n";
  };
  auto hrv_block = [&](const char* name, const HrvStats& h) {
    out << "  HRV (" << name << ")\n"
        << "    RMSSD [ms]  " << fmt2(h.rmssd_ms) << "\n"
        << "    pNN50 [%]   " << fmt2(h.pnn50_pct) << "\n"
        << "    STD [ms]    " << fmt2(h.std_ms) << "\n";
  };

  for (const auto& r : report.recordings) {
    out << "Recording: " << (r.id.empty() ? "(unnamed)" : r.id) << "\n";
    out << "  Sync: slope " << r.map.slope << ", offset "
        << fmt2(r.map.offset_ms) << " ms, objective " << fmt2(r.sync.before_mae_ms)
        << " -> " << fmt2(r.sync.after_mae_ms) << " ms\n";
    out << "  Windows: " << r.window_summary.clean << "/" << r.window_summary.total
        << " clean\n";
    detection_block(r.detection);
    if (r.errors) errors_block(*r.errors);
    if (r.hrv_device) hrv_block("device", *r.hrv_device);
    if (r.hrv_reference) hrv_block("reference", *r.hrv_reference);
    if (r.af_screen)
      out << "  AF screen: " << screen_label_name(r.af_screen->overall)
          << " (AF windows: " << fmt2(100.0 * r.af_screen->fraction_af) << "%)\n";
    out << "\n";
  }

  if (report.recordings.size() > 1 && report.group.detection) {
    out << "Group (pooled over " << report.recordings.size() << " recordings)\n";
    detection_block(*report.group.detection);
    if (report.group.errors) errors_block(*report.group.errors);
    if (report.group.hrv_device_pooled)
      hrv_block("device, pooled", *report.group.hrv_device_pooled);
    if (report.group.hrv_device_mean)
      hrv_block("device, per-recording mean", *report.group.hrv_device_mean);
    if (report.group.hrv_reference_pooled)
      hrv_block("reference, pooled", *report.group.hrv_reference_pooled);
    if (report.group.hrv_reference_mean)
      hrv_block("reference, per-recording mean", *report.group.hrv_reference_mean);
  }
  return out.str();
}

std::string bland_altman_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "mean_ms,diff_ms\n";
  auto dump = [&](const BlandAltmanData& ba) {
    for (const auto& [mean, diff] : ba.points) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f\n", mean, diff);
      out << buf;
    }
  };
  if (report.recordings.size() == 1 && report.recordings[0].bland_altman)
    dump(*report.recordings[0].bland_altman);
  else if (report.group.bland_altman)
    dump(*report.group.bland_altman);
  return out.str();
}

std::string std20_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "start_index,std20_ms,label\n";
  for (const auto& r : report.recordings) {
    if (!r.af_screen) continue;
    for (const auto& w : r.af_screen->window_scores) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%zu,%.3f,%s\n", w.start_index, w.std_ms,
                    w.af ? "AF" : "SR");
      out << buf;
    }
  }
  return out.str();
}

std::string audit_csv(const MatchResult& result, const BeatSeries& det,
                      const BeatSeries& ref) {
  std::ostringstream out;
  out << "series,index,timestamp_ms,label,partner_index\n";

  std::vector<std::int64_t> ref_partner(ref.size(), -1);
  std::vector<std::int64_t> det_partner(det.size(), -1);
  for (const auto& [rj, dk] : result.pairs) {
    ref_partner[rj] = static_cast<std::int64_t>(dk);
    det_partner[dk] = static_cast<std::int64_t>(rj);
  }

  for (std::size_t j = 0; j < ref.size(); ++j) {
    out << "ref," << j << ',' << ref.timestamps_ms()[j] << ','
        << (ref_partner[j] >= 0 ? "correct" : "missing") << ',';
    if (ref_partner[j] >= 0) out << ref_partner[j];
    out << '\n';
  }
  for (std::size_t k = 0; k < det.size(); ++k) {
    out << "det," << k << ',' << det.timestamps_ms()[k] << ','
        << (det_partner[k] >= 0 ? "correct" : "extra") << ',';
    if (det_partner[k] >= 0) out << det_partner[k];
    out << '\n';
  }
  return out.str();
}

}  // namespace ibival
