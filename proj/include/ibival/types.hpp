#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibival/error.hpp"

namespace ibival {

enum class Source { device, reference };
enum class Rhythm { sinus, afib, unknown };

const char* source_name(Source s);
const char* rhythm_name(Rhythm r);

/// Interval bounds applied when a series is validated. In strict mode an
/// out-of-range interval rejects the series; otherwise the beat ending the
/// interval is flagged and kept.
struct ValidationLimits {
  std::int64_t min_interval_ms = 200;
  std::int64_t max_interval_ms = 4000;
  bool strict = true;
};

/// Immutable sequence of beat timestamps (integer milliseconds, strictly
/// increasing). Construct through validate_series(). Timestamps from files
/// and generators are non-negative; clock-mapped series may go negative when
/// one recording started before the other.
class BeatSeries {
public:
  const std::vector<std::int64_t>& timestamps_ms() const { return timestamps_; }
  Source source() const { return source_; }
  const std::string& subject_id() const { return subject_id_; }
  std::optional<Rhythm> rhythm_label() const { return rhythm_; }

  /// Beats whose preceding interval fell outside the validation limits
  /// (non-strict mode only).
  const std::vector<std::size_t>& flagged_beats() const { return flagged_; }

  std::size_t size() const { return timestamps_.size(); }
  std::int64_t front_ms() const { return timestamps_.front(); }
  std::int64_t back_ms() const { return timestamps_.back(); }
  std::int64_t span_ms() const { return back_ms() - front_ms(); }

private:
  friend BeatSeries validate_series(std::vector<std::int64_t>, Source,
                                    const ValidationLimits&, std::string,
                                    std::optional<Rhythm>);
  BeatSeries() = default;

  std::vector<std::int64_t> timestamps_;
  Source source_ = Source::device;
  std::string subject_id_;
  std::optional<Rhythm> rhythm_;
  std::vector<std::size_t> flagged_;
};

/// Consecutive-beat differences; intervals_ms[i] ends at end_timestamps_ms[i].
struct IntervalView {
  std::vector<std::int64_t> intervals_ms;
  std::vector<std::int64_t> end_timestamps_ms;

  std::size_t size() const { return intervals_ms.size(); }
};

/// One tile of the recording. Windows are half-open [start_ms, end_ms) except
/// the last, which also includes its end so the final beat is covered.
struct MinuteWindow {
  std::size_t index = 0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  bool partial = false;
  bool clean = false;
};

BeatSeries validate_series(std::vector<std::int64_t> timestamps, Source source,
                           const ValidationLimits& limits = {},
                           std::string subject_id = {},
                           std::optional<Rhythm> rhythm = std::nullopt);

IntervalView intervals(const BeatSeries& series);

std::vector<MinuteWindow> windows(const BeatSeries& series,
                                  std::int64_t window_len_ms = 60'000);

/// Index of the window containing t; out-of-range times clamp to the ends.
std::size_t window_index_of(std::span<const MinuteWindow> wins, std::int64_t t_ms);

/// Sub-series with timestamps inside [lo_ms, hi_ms]. Throws too_short if
/// fewer than 2 beats remain.
BeatSeries crop(const BeatSeries& series, std::int64_t lo_ms, std::int64_t hi_ms);

}  // namespace ibival
