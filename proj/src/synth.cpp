#include "ibival/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ibival/rng.hpp"

namespace ibival {

namespace {

void check_config(const SynthConfig& c) {
  if (c.duration_ms <= 0)
    throw Error(errc::invalid_config, "duration_ms must be positive");
  if (c.start_ms < 0)
    throw Error(errc::invalid_config, "start_ms must be non-negative");
  if (c.mean_rr_ms <= 0)
    throw Error(errc::invalid_config, "mean_rr_ms must be positive");
  if (c.rr_min_ms < 200.0 || c.rr_max_ms > 4000.0 || c.rr_min_ms >= c.rr_max_ms)
    throw Error(errc::invalid_config,
                "rr bounds must satisfy 200 <= rr_min < rr_max <= 4000");
  for (double rate : {c.extra_beat_rate, c.missed_beat_rate}) {
    if (rate < 0.0 || rate > 1.0)
      throw Error(errc::invalid_config, "artifact rates must lie in [0, 1]");
  }
  if (c.timestamp_noise_std_ms < 0.0)
    throw Error(errc::invalid_config, "timestamp_noise_std_ms must be >= 0");
  if (c.clock_slope <= 0.0)
    throw Error(errc::invalid_config, "clock_slope must be positive");
}

double truncated_gauss(Rng& rng, double mean, double std, double lo, double hi) {
  // rejection; draw count varies but the stream stays deterministic
  for (;;) {
    const double x = rng.gauss(mean, std);
    if (x >= lo && x <= hi) return x;
  }
}

}  // namespace

SynthConfig SynthConfig::sr_defaults(std::uint64_t seed, std::int64_t duration_ms) {
  SynthConfig c;
  c.seed = seed;
  c.duration_ms = duration_ms;
  c.rhythm = Rhythm::sinus;
  c.mean_rr_ms = 1000.0;
  return c;
}

SynthConfig SynthConfig::af_defaults(std::uint64_t seed, std::int64_t duration_ms) {
  SynthConfig c;
  c.seed = seed;
  c.duration_ms = duration_ms;
  c.rhythm = Rhythm::afib;
  c.mean_rr_ms = 900.0;
  return c;
}

std::size_t GroundTruth::inserted_count() const {
  return static_cast<std::size_t>(
      std::count(det_origin.begin(), det_origin.end(), Origin::inserted));
}

std::size_t GroundTruth::genuine_count() const {
  return det_origin.size() - inserted_count();
}

BeatSeries generate(const SynthConfig& config) {
  check_config(config);
  Rng rng(config.seed);

  std::vector<std::int64_t> ts;
  ts.reserve(static_cast<std::size_t>(config.duration_ms / config.mean_rr_ms) + 2);

  double t = static_cast<double>(config.start_ms);
  ts.push_back(config.start_ms);
  for (;;) {
    double rr;
    if (config.rhythm == Rhythm::afib) {
      rr = truncated_gauss(rng, config.mean_rr_ms, config.rr_std_ms,
                           config.rr_min_ms, config.rr_max_ms);
    } else {
      rr = config.mean_rr_ms +
           config.rsa_amplitude_ms *
               std::sin(2.0 * std::numbers::pi * t / config.rsa_period_ms) +
           rng.gauss(0.0, config.jitter_std_ms);
      rr = std::clamp(rr, 200.0, 4000.0);
    }
    t += rr;
    if (t > static_cast<double>(config.start_ms + config.duration_ms)) break;
    ts.push_back(std::llround(t));
  }

  return validate_series(std::move(ts), Source::reference, ValidationLimits{},
                         config.subject_id, config.rhythm);
}

CorruptResult corrupt(const BeatSeries& ref, const SynthConfig& config) {
  check_config(config);
  Rng rng(config.seed);

  const auto& rts = ref.timestamps_ms();

  // timestamp noise on the true beat times
  std::vector<double> noisy(rts.size());
  for (std::size_t i = 0; i < rts.size(); ++i) {
    noisy[i] = static_cast<double>(rts[i]);
    if (config.timestamp_noise_std_ms > 0.0)
      noisy[i] += rng.gauss(0.0, config.timestamp_noise_std_ms);
  }

  // deletions
  GroundTruth truth;
  std::vector<double> kept;
  std::vector<std::size_t> kept_ref_index;
  kept.reserve(rts.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (config.missed_beat_rate > 0.0 && rng.bernoulli(config.missed_beat_rate)) {
      truth.deleted_ref_indices.push_back(i);
    } else {
      kept.push_back(noisy[i]);
      kept_ref_index.push_back(i);
    }
  }

  // insertions: one candidate per surviving interval, placed uniformly inside
  std::vector<double> out;
  std::vector<GroundTruth::Origin> origin;
  std::vector<std::size_t> ref_index;
  out.reserve(kept.size() * 2);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.push_back(kept[i]);
    origin.push_back(GroundTruth::Origin::genuine);
    ref_index.push_back(kept_ref_index[i]);
    if (i + 1 < kept.size() && config.extra_beat_rate > 0.0 &&
        rng.bernoulli(config.extra_beat_rate)) {
      const double gap = kept[i + 1] - kept[i];
      double pos = kept[i] + rng.uniform01() * gap;
      pos = std::clamp(pos, kept[i] + 1.0, kept[i + 1] - 1.0);
      out.push_back(pos);
      origin.push_back(GroundTruth::Origin::inserted);
      ref_index.push_back(std::numeric_limits<std::size_t>::max());
    }
  }

  // clock distortion, then quantize to integer milliseconds
  std::vector<std::int64_t> final_ts(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    final_ts[i] = std::llround(config.clock_slope * out[i] + config.clock_offset_ms);

  // quantization can merge beats closer than 1 ms; drop the later duplicate
  std::vector<std::int64_t> dedup;
  dedup.reserve(final_ts.size());
  truth.det_origin.clear();
  truth.det_ref_index.clear();
  for (std::size_t i = 0; i < final_ts.size(); ++i) {
    if (!dedup.empty() && final_ts[i] <= dedup.back()) continue;
    dedup.push_back(final_ts[i]);
    truth.det_origin.push_back(origin[i]);
    truth.det_ref_index.push_back(ref_index[i]);
  }

  ValidationLimits lenient;
  lenient.strict = false;  // inserted beats legitimately create short intervals
  CorruptResult result{
      validate_series(std::move(dedup), Source::device, lenient,
                      ref.subject_id(), ref.rhythm_label()),
      std::move(truth)};
  return result;
}

}  // namespace ibival
