#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ibival/afscreen.hpp"
#include "ibival/beatmatch.hpp"
#include "ibival/metrics.hpp"
#include "ibival/sync.hpp"
#include "ibival/types.hpp"

#include <json.hpp>

namespace ibival {

struct PipelineConfig {
  ValidationLimits det_limits{200, 4000, false};  // device data keeps artifacts
  ValidationLimits ref_limits{200, 4000, true};
  SearchConfig search;
  EctopicConfig ectopic;
  AfConfig af;
  std::int64_t window_len_ms = 60'000;
  bool include_partial = false;
};

struct WindowSummary {
  std::size_t total = 0;
  std::size_t clean = 0;
  std::size_t partial = 0;
};

/// Usable interval material retained per recording so group-level statistics
/// can be computed by the same module functions over the concatenated data
/// instead of re-derived aggregates.
struct HrvInput {
  IntervalView view;
  std::vector<IntervalUse> usability;
};

struct RecordingReport {
  std::string id;
  DetectionSummary detection;
  SyncReport sync;
  ClockMap map;
  WindowSummary window_summary;
  PairSet pair_set;
  std::optional<ErrorStats> errors;
  std::optional<BlandAltmanData> bland_altman;
  std::optional<HrvStats> hrv_device;
  std::optional<HrvStats> hrv_reference;
  std::optional<AfScreenResult> af_screen;
  HrvInput device_hrv_input;
  HrvInput reference_hrv_input;
};

struct GroupReport {
  std::optional<DetectionSummary> detection;  // pooled beat counts
  std::optional<ErrorStats> errors;           // over all pairs, pooled
  std::optional<BlandAltmanData> bland_altman;
  std::optional<HrvStats> hrv_device_pooled;
  std::optional<HrvStats> hrv_reference_pooled;
  std::optional<HrvStats> hrv_device_mean;  // mean of per-recording values
  std::optional<HrvStats> hrv_reference_mean;
};

struct EvaluationReport {
  std::vector<RecordingReport> recordings;
  GroupReport group;
};

/// Full pipeline for one device/reference pair: sync (global + per-window),
/// crop to the overlap, match, clean-window filter, ectopic exclusion, error
/// and HRV statistics, AF screen of the device series.
RecordingReport evaluate_pair(const BeatSeries& det, const BeatSeries& ref,
                              const PipelineConfig& config, std::string id = {});

/// Batch evaluation; recordings may run on several threads but results are
/// aggregated in input order, so output is identical to a sequential run.
EvaluationReport evaluate_batch(
    const std::vector<std::pair<BeatSeries, BeatSeries>>& pairs,
    const PipelineConfig& config, unsigned jobs = 1);

nlohmann::json to_json(const EvaluationReport& report);
std::string render_text(const EvaluationReport& report);

std::string bland_altman_csv(const EvaluationReport& report);
std::string std20_csv(const EvaluationReport& report);
std::string audit_csv(const MatchResult& result, const BeatSeries& det,
                      const BeatSeries& ref);

}  // namespace ibival
