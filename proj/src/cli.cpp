#include "ibival/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibival/afscreen.hpp"
#include "ibival/beat_file.hpp"
#include "ibival/beatmatch.hpp"
#include "ibival/metrics.hpp"
#include "ibival/report.hpp"
#include "ibival/sync.hpp"
#include "ibival/synth.hpp"
#include "ibival/types.hpp"

namespace ibival::cli {

namespace {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(errc::parse_error, "cannot write '" + tmp.string() + "'");
    f << content;
  }
  fs::rename(tmp, path);
}

nlohmann::json map_to_json(const ClockMap& map) {
  return {{"slope", map.slope},
          {"offset_ms", map.offset_ms},
          {"per_window_offset_ms", map.per_window_offset_ms},
          {"windows_start_ms", map.windows_start_ms},
          {"window_len_ms", map.window_len_ms}};
}

ClockMap map_from_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(errc::parse_error, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    f >> j;
    ClockMap map;
    map.slope = j.at("slope").get<double>();
    map.offset_ms = j.at("offset_ms").get<double>();
    map.per_window_offset_ms =
        j.at("per_window_offset_ms").get<std::vector<double>>();
    map.windows_start_ms = j.at("windows_start_ms").get<std::int64_t>();
    map.window_len_ms = j.at("window_len_ms").get<std::int64_t>();
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::parse_error,
                "bad clock map '" + path.string() + "': " + e.what());
  }
}

struct CommonOpts {
  std::string det_path;
  std::string ref_path;
  bool strict_device = false;
  PipelineConfig pipeline;
};

void add_search_flags(CLI::App* sub, SearchConfig& s) {
  sub->add_option("--offset-range-ms", s.offset_range_ms,
                  "Global offset search range (+/-)");
  sub->add_option("--offset-step-ms", s.offset_coarse_step_ms,
                  "Coarse offset grid step");
  sub->add_option("--offset-fine-range-ms", s.offset_fine_range_ms,
                  "Fine offset range around the coarse optimum");
  sub->add_option("--offset-fine-step-ms", s.offset_fine_step_ms,
                  "Fine offset grid step");
  sub->add_option("--slope-range-ppm", s.slope_range_ppm,
                  "Slope search range around 1.0 (+/- ppm)");
  sub->add_option("--slope-step-ppm", s.slope_coarse_step_ppm,
                  "Coarse slope grid step");
  sub->add_option("--slope-fine-range-ppm", s.slope_fine_range_ppm,
                  "Fine slope range around the coarse optimum");
  sub->add_option("--slope-fine-step-ppm", s.slope_fine_step_ppm,
                  "Fine slope grid step");
  sub->add_option("--pairing-cap-ms", s.pairing_cap_ms,
                  "Nearest-beat pairing distance cap");
  sub->add_option("--coarse-stride", s.coarse_stride,
                  "Detected-beat stride during the coarse search");
  sub->add_option("--window-offset-range-ms", s.window_offset_range_ms,
                  "Per-window offset search range (+/-)");
  sub->add_option("--min-window-matches", s.min_window_matches,
                  "Paired beats required before a window keeps its own offset");
}

void add_metric_flags(CLI::App* sub, PipelineConfig& p) {
  sub->add_option("--window-len-ms", p.window_len_ms, "Accounting window length");
  sub->add_option("--ectopic-threshold", p.ectopic.threshold_fraction,
                  "Ectopic deviation fraction of the running median");
  sub->add_option("--ectopic-window", p.ectopic.median_window,
                  "Running median length for ectopic screening");
  sub->add_flag("--include-partial", p.include_partial,
                "Keep the trailing partial window in statistics");
}

void add_af_flags(CLI::App* sub, AfConfig& a) {
  sub->add_option("--std-threshold-ms", a.std_threshold_ms,
                  "Rolling-std threshold separating AF from SR windows");
  sub->add_option("--af-fraction", a.af_fraction,
                  "AF-window share at or above which the recording is AF");
  sub->add_option("--sr-fraction", a.sr_fraction,
                  "AF-window share at or below which the recording is SR");
  sub->add_option("--af-window-len", a.window_len, "Intervals per rolling group");
  sub->add_option("--af-stride", a.stride,
                  "Group stride (1 = sliding, 20 = non-overlapping)");
}

BeatSeries load_device(const CommonOpts& o) {
  ValidationLimits limits = o.pipeline.det_limits;
  limits.strict = o.strict_device;
  return load_beat_file(o.det_path, limits);
}

BeatSeries load_reference(const CommonOpts& o) {
  return load_beat_file(o.ref_path, o.pipeline.ref_limits);
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int run_synth(const SynthConfig& cfg, const std::string& out_path,
              const std::string& det_path, const std::string& truth_path) {
  const BeatSeries ref = generate(cfg);
  write_beat_file(ref, out_path);
  std::cout << "wrote " << out_path << " (" << ref.size() << " beats)\n";

  if (!det_path.empty()) {
    const CorruptResult corrupted = corrupt(ref, cfg);
    write_beat_file(corrupted.det, det_path);
    std::cout << "wrote " << det_path << " (" << corrupted.det.size()
              << " beats, " << corrupted.truth.inserted_count() << " inserted, "
              << corrupted.truth.deleted_ref_indices.size() << " deleted)\n";
    if (!truth_path.empty()) {
      std::ostringstream t;
      t << "beat_index,label\n";
      for (std::size_t i = 0; i < corrupted.truth.det_origin.size(); ++i)
        t << i << ','
          << (corrupted.truth.det_origin[i] == GroundTruth::Origin::inserted
                  ? "inserted"
                  : "genuine")
          << '\n';
      write_text_file(truth_path, t.str());
      std::cout << "wrote " << truth_path << "\n";
    }
  }
  return 0;
}

int run_sync(const CommonOpts& o, const std::string& map_out) {
  const BeatSeries det = load_device(o);
  const BeatSeries ref = load_reference(o);

  const GlobalAlignment global = estimate_global_alignment(det, ref, o.pipeline.search);
  const auto wins = windows(ref, o.pipeline.window_len_ms);
  const GlobalAlignment refined =
      refine_per_window(det, ref, global.map, wins, o.pipeline.search);

  std::cout << "slope: " << refined.map.slope << "\n"
            << "offset_ms: " << refined.map.offset_ms << "\n"
            << "objective_ms: " << global.report.before_mae_ms << " -> "
            << refined.report.after_mae_ms << "\n"
            << "evaluations: "
            << global.report.evaluations + refined.report.evaluations << "\n";

  if (!map_out.empty()) {
    write_text_file(map_out, map_to_json(refined.map).dump(2) + "\n");
    std::cout << "wrote " << map_out << "\n";
  }
  return 0;
}

ClockMap sync_or_load(const CommonOpts& o, const std::string& map_in,
                      const BeatSeries& det, const BeatSeries& ref) {
  if (!map_in.empty()) return map_from_json(map_in);
  const GlobalAlignment global = estimate_global_alignment(det, ref, o.pipeline.search);
  const auto wins = windows(ref, o.pipeline.window_len_ms);
  return refine_per_window(det, ref, global.map, wins, o.pipeline.search).map;
}

int run_match(const CommonOpts& o, const std::string& map_in,
              const std::string& audit_out) {
  const BeatSeries det = load_device(o);
  const BeatSeries ref = load_reference(o);
  const ClockMap map = sync_or_load(o, map_in, det, ref);

  BeatSeries aligned = align(map, det, o.pipeline.det_limits);
  const auto cap = static_cast<std::int64_t>(o.pipeline.search.pairing_cap_ms);
  aligned = crop(aligned, ref.front_ms() - cap, ref.back_ms() + cap);

  const auto wins = windows(ref, o.pipeline.window_len_ms);
  const MatchResult result = match(aligned, ref, wins);
  const DetectionSummary s = summarize(result);

  if (result.alignment_warning)
    std::cerr << "warning: series still look unsynchronized (nearest-pair MAE "
              << result.nearest_pair_mae_ms << " ms)\n";

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "total_ref %zu  total_det %zu\n"
                "correct %.2f%%  extra %.2f%%  missing %.2f%%\n",
                s.counts.total_ref, s.counts.total_det, s.correct_pct,
                s.extra_pct, s.missing_pct);
  std::cout << buf;

  if (!audit_out.empty()) {
    write_text_file(audit_out, audit_csv(result, aligned, ref));
    std::cout << "wrote " << audit_out << "\n";
  }
  return 0;
}

int run_metrics(const CommonOpts& o, const std::string& map_in,
                const std::string& ba_out) {
  const BeatSeries det = load_device(o);
  const BeatSeries ref = load_reference(o);
  const ClockMap map = sync_or_load(o, map_in, det, ref);

  BeatSeries aligned = align(map, det, o.pipeline.det_limits);
  const auto cap = static_cast<std::int64_t>(o.pipeline.search.pairing_cap_ms);
  aligned = crop(aligned, ref.front_ms() - cap, ref.back_ms() + cap);

  const auto wins = windows(ref, o.pipeline.window_len_ms);
  const MatchResult result = match(aligned, ref, wins);
  const auto marked = mark_clean_windows(result, wins);
  const EctopicMask mask = exclude_ectopic(ref, o.pipeline.ectopic);
  const PairSet pairs = build_pair_set(result, aligned, ref, marked, &mask,
                                       o.pipeline.include_partial);
  const ErrorStats e = error_stats(pairs);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "n_pairs %zu (dropped: %zu unclean, %zu ectopic)\n"
                "ME %.2f ms  MAE %.2f ms  MAPE %.2f%%  RMSE %.2f ms\n",
                e.n_pairs, pairs.dropped_unclean, pairs.dropped_ectopic, e.me_ms,
                e.mae_ms, e.mape_pct, e.rmse_ms);
  std::cout << buf;

  if (!ba_out.empty()) {
    const BlandAltmanData ba = bland_altman(pairs);
    std::ostringstream csv;
    csv << "mean_ms,diff_ms\n";
    for (const auto& [mean, diff] : ba.points) {
      char row[64];
      std::snprintf(row, sizeof(row), "%.1f,%.1f\n", mean, diff);
      csv << row;
    }
    write_text_file(ba_out, csv.str());
    std::cout << "wrote " << ba_out << " (bias " << ba.bias_ms << " ms)\n";
  }
  return 0;
}

int run_hrv(const std::string& input, const EctopicConfig& ectopic,
            const ValidationLimits& limits) {
  const BeatSeries series = load_beat_file(input, limits);
  const EctopicMask mask = exclude_ectopic(series, ectopic);
  const HrvStats h = hrv_stats(intervals(series), mask.use);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "RMSSD %.2f ms  pNN50 %.2f%%  STD %.2f ms  (%zu intervals, "
                "%zu excluded as ectopic)\n",
                h.rmssd_ms, h.pnn50_pct, h.std_ms, h.n_intervals,
                mask.excluded_count);
  std::cout << buf;
  return 0;
}

int run_afscreen(const std::string& input, const AfConfig& af,
                 const std::string& scores_out, const ValidationLimits& limits) {
  const BeatSeries series = load_beat_file(input, limits);
  const AfScreenResult r =
      classify(window_features(intervals(series), af.stride, af.window_len), af);

  char buf[120];
  std::snprintf(buf, sizeof(buf), "%s (AF windows: %.2f%% of %zu)\n",
                screen_label_name(r.overall), 100.0 * r.fraction_af,
                r.window_scores.size());
  std::cout << buf;

  if (!scores_out.empty()) {
    std::ostringstream csv;
    csv << "start_index,std20_ms,label\n";
    for (const auto& w : r.window_scores) {
      char row[96];
      std::snprintf(row, sizeof(row), "%zu,%.3f,%s\n", w.start_index, w.std_ms,
                    w.af ? "AF" : "SR");
      csv << row;
    }
    write_text_file(scores_out, csv.str());
    std::cout << "wrote " << scores_out << "\n";
  }
  return 0;
}

int run_report(const CommonOpts& o, const std::vector<std::string>& det_paths,
               const std::vector<std::string>& ref_paths,
               const std::string& out_dir, unsigned jobs) {
  if (det_paths.size() != ref_paths.size() || det_paths.empty())
    throw CLI::ValidationError(
        "--det and --ref must be given the same number of times");

  ValidationLimits det_limits = o.pipeline.det_limits;
  det_limits.strict = o.strict_device;

  std::vector<std::pair<BeatSeries, BeatSeries>> inputs;
  inputs.reserve(det_paths.size());
  for (std::size_t i = 0; i < det_paths.size(); ++i)
    inputs.emplace_back(load_beat_file(det_paths[i], det_limits),
                        load_beat_file(ref_paths[i], o.pipeline.ref_limits));

  const EvaluationReport report = evaluate_batch(inputs, o.pipeline, jobs);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_text_file(dir / "report.json", to_json(report).dump(2) + "\n");
  const std::string text = render_text(report);
  write_text_file(dir / "report.txt", text);
  write_text_file(dir / "bland_altman.csv", bland_altman_csv(report));
  write_text_file(dir / "std20.csv", std20_csv(report));

  std::cout << text;
  std::cout << "wrote " << (dir / "report.json").string() << ", report.txt, "
            << "bland_altman.csv, std20.csv\n";
  return 0;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Beat-interval validation toolkit: synchronizes wearable and "
               "reference beat series, scores detection and interval accuracy "
               "over clean one-minute windows, and screens for atrial "
               "fibrillation from rolling interval variability."};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from an INI file");

  // synth -------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic recording");
  std::string rhythm_str = "sr";
  SynthConfig synth_cfg = SynthConfig::sr_defaults(1);
  std::string synth_out = "ref.csv", synth_det, synth_truth;
  synth->add_option("--rhythm", rhythm_str, "sr or af")
      ->check(CLI::IsMember({"sr", "af"}));
  synth->add_option("--seed", synth_cfg.seed, "RNG seed");
  synth->add_option("--duration-ms", synth_cfg.duration_ms, "Recording length");
  synth->add_option("--start-ms", synth_cfg.start_ms, "First beat timestamp");
  auto* mean_opt =
      synth->add_option("--mean-rr-ms", synth_cfg.mean_rr_ms, "Mean interval");
  synth->add_option("--rsa-amplitude-ms", synth_cfg.rsa_amplitude_ms,
                    "SR sinusoidal modulation amplitude");
  synth->add_option("--rsa-period-ms", synth_cfg.rsa_period_ms,
                    "SR modulation period");
  synth->add_option("--jitter-std-ms", synth_cfg.jitter_std_ms,
                    "SR beat-to-beat jitter");
  synth->add_option("--rr-std-ms", synth_cfg.rr_std_ms, "AF interval spread");
  synth->add_option("--rr-min-ms", synth_cfg.rr_min_ms, "AF lower clip");
  synth->add_option("--rr-max-ms", synth_cfg.rr_max_ms, "AF upper clip");
  synth->add_option("--extra-rate", synth_cfg.extra_beat_rate,
                    "Insertion probability per interval");
  synth->add_option("--missed-rate", synth_cfg.missed_beat_rate,
                    "Deletion probability per beat");
  synth->add_option("--noise-std-ms", synth_cfg.timestamp_noise_std_ms,
                    "Timestamp noise");
  synth->add_option("--clock-slope", synth_cfg.clock_slope, "Clock rate factor");
  synth->add_option("--clock-offset-ms", synth_cfg.clock_offset_ms,
                    "Clock shift");
  synth->add_option("--subject-id", synth_cfg.subject_id, "Metadata tag");
  synth->add_option("--out", synth_out, "Reference CSV path");
  synth->add_option("--det", synth_det,
                    "Also write a corrupted device CSV here");
  synth->add_option("--truth", synth_truth,
                    "Ground-truth sidecar CSV (needs --det)");

  // shared pipeline options -------------------------------------------------
  CommonOpts sync_o, match_o, metrics_o, report_o;
  auto add_common = [&](CLI::App* sub, CommonOpts& o, bool io_required) {
    auto* det = sub->add_option("--det", o.det_path, "Device beat CSV");
    auto* ref = sub->add_option("--ref", o.ref_path, "Reference beat CSV");
    if (io_required) {
      det->required();
      ref->required();
    }
    sub->add_flag("--strict-device", o.strict_device,
                  "Reject device files with out-of-range intervals");
    add_search_flags(sub, o.pipeline.search);
    add_metric_flags(sub, o.pipeline);
  };

  auto* sync_cmd = app.add_subcommand("sync", "Estimate the clock alignment");
  std::string map_out;
  add_common(sync_cmd, sync_o, true);
  sync_cmd->add_option("--map-out", map_out, "Write the clock map as JSON");

  auto* match_cmd =
      app.add_subcommand("match", "Classify beats as correct/extra/missing");
  std::string match_map_in, audit_out;
  add_common(match_cmd, match_o, true);
  match_cmd->add_option("--map", match_map_in, "Reuse a saved clock map");
  match_cmd->add_option("--audit", audit_out, "Per-beat classification CSV");

  auto* metrics_cmd =
      app.add_subcommand("metrics", "Interval error statistics on clean windows");
  std::string metrics_map_in, ba_out;
  add_common(metrics_cmd, metrics_o, true);
  metrics_cmd->add_option("--map", metrics_map_in, "Reuse a saved clock map");
  metrics_cmd->add_option("--ba-out", ba_out, "Bland-Altman points CSV");

  auto* hrv_cmd = app.add_subcommand("hrv", "RMSSD / pNN50 / STD of one series");
  std::string hrv_input;
  EctopicConfig hrv_ectopic;
  bool hrv_strict = false;
  hrv_cmd->add_option("--input", hrv_input, "Beat CSV")->required();
  hrv_cmd->add_option("--ectopic-threshold", hrv_ectopic.threshold_fraction,
                      "Ectopic deviation fraction");
  hrv_cmd->add_option("--ectopic-window", hrv_ectopic.median_window,
                      "Running median length");
  hrv_cmd->add_flag("--strict", hrv_strict, "Strict interval validation");

  auto* af_cmd = app.add_subcommand("afscreen",
                                    "Screen a series for atrial fibrillation");
  std::string af_input, scores_out;
  AfConfig af_cfg;
  bool af_strict = false;
  af_cmd->add_option("--input", af_input, "Beat CSV")->required();
  add_af_flags(af_cmd, af_cfg);
  af_cmd->add_option("--scores-out", scores_out, "Rolling window scores CSV");
  af_cmd->add_flag("--strict", af_strict, "Strict interval validation");

  auto* report_cmd =
      app.add_subcommand("report", "Full pipeline over one or more pairs");
  std::vector<std::string> report_dets, report_refs;
  std::string out_dir = "report";
  unsigned jobs = 1;
  report_cmd->add_option("--det", report_dets, "Device beat CSV (repeatable)")
      ->required();
  report_cmd->add_option("--ref", report_refs, "Reference beat CSV (repeatable)")
      ->required();
  report_cmd->add_option("--out", out_dir, "Output directory");
  report_cmd->add_option("--jobs", jobs, "Recordings evaluated in parallel");
  report_cmd->add_flag("--strict-device", report_o.strict_device,
                       "Reject device files with out-of-range intervals");
  add_search_flags(report_cmd, report_o.pipeline.search);
  add_metric_flags(report_cmd, report_o.pipeline);
  add_af_flags(report_cmd, report_o.pipeline.af);

  // CLI11 wants argv reversed, program name stripped
  std::vector<std::string> rev(args.rbegin(),
                               args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      if (rhythm_str == "af") {
        synth_cfg.rhythm = Rhythm::afib;
        if (mean_opt->count() == 0) synth_cfg.mean_rr_ms = 900.0;
      }
      return run_synth(synth_cfg, synth_out, synth_det, synth_truth);
    }
    if (sync_cmd->parsed()) return run_sync(sync_o, map_out);
    if (match_cmd->parsed()) return run_match(match_o, match_map_in, audit_out);
    if (metrics_cmd->parsed())
      return run_metrics(metrics_o, metrics_map_in, ba_out);
    if (hrv_cmd->parsed()) {
      ValidationLimits limits;
      limits.strict = hrv_strict;
      return run_hrv(hrv_input, hrv_ectopic, limits);
    }
    if (af_cmd->parsed()) {
      ValidationLimits limits;
      limits.strict = af_strict;
      return run_afscreen(af_input, af_cfg, scores_out, limits);
    }
    if (report_cmd->parsed())
      return run_report(report_o, report_dets, report_refs, out_dir, jobs);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace ibival::cli
