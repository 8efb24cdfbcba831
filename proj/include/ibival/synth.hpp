#pragma once

#include <cstdint>
#include <vector>

#include "ibival/types.hpp"

namespace ibival {

/// Generator settings. SR beats follow a slow sinusoidal modulation plus
/// gaussian jitter; AF beats draw every interval independently from a
/// truncated gaussian. Corruption parameters model device artifacts: timestamp
/// noise, missed beats, inserted beats (splitting an interval, which is what
/// motion artifacts mostly do), and a linear clock distortion.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::int64_t duration_ms = 600'000;
  std::int64_t start_ms = 0;  // timestamp of the first beat
  Rhythm rhythm = Rhythm::sinus;
  double mean_rr_ms = 1000.0;

  // SR shape
  double rsa_amplitude_ms = 30.0;
  double rsa_period_ms = 4000.0;
  double jitter_std_ms = 15.0;

  // AF shape
  double rr_std_ms = 180.0;
  double rr_min_ms = 300.0;
  double rr_max_ms = 1800.0;

  // artifacts
  double extra_beat_rate = 0.0;
  double missed_beat_rate = 0.0;
  double timestamp_noise_std_ms = 0.0;

  // clock distortion applied last: t' = slope * t + offset
  double clock_slope = 1.0;
  double clock_offset_ms = 0.0;

  std::string subject_id = "synthetic";

  static SynthConfig sr_defaults(std::uint64_t seed,
                                 std::int64_t duration_ms = 600'000);
  static SynthConfig af_defaults(std::uint64_t seed,
                                 std::int64_t duration_ms = 600'000);
};

/// Per-beat provenance of a corrupted series, kept for oracle tests.
struct GroundTruth {
  enum class Origin : std::uint8_t { genuine, inserted };

  std::vector<Origin> det_origin;        // one per detected beat
  std::vector<std::size_t> det_ref_index;  // source ref beat; SIZE_MAX if inserted
  std::vector<std::size_t> deleted_ref_indices;

  std::size_t inserted_count() const;
  std::size_t genuine_count() const;
};

struct CorruptResult {
  BeatSeries det;
  GroundTruth truth;
};

/// Clean reference series for the configured rhythm. Deterministic per seed.
BeatSeries generate(const SynthConfig& config);

/// Device-style corruption of a reference series, in order: timestamp noise,
/// deletions, insertions, clock distortion. With all parameters at their
/// identity values the output equals the input.
CorruptResult corrupt(const BeatSeries& ref, const SynthConfig& config);

}  // namespace ibival
