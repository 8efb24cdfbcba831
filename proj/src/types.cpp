#include "ibival/types.hpp"

#include <algorithm>
#include <string>

namespace ibival {

const char* errc_name(errc code) {
  switch (code) {
    case errc::non_monotonic: return "non_monotonic";
    case errc::too_short: return "too_short";
    case errc::physiologically_invalid: return "physiologically_invalid";
    case errc::no_overlap: return "no_overlap";
    case errc::degenerate_search: return "degenerate_search";
    case errc::empty_series: return "empty_series";
    case errc::empty_pair_set: return "empty_pair_set";
    case errc::single_class: return "single_class";
    case errc::invalid_config: return "invalid_config";
    case errc::parse_error: return "parse_error";
    case errc::consistency_error: return "consistency_error";
  }
  return "unknown";
}

const char* source_name(Source s) {
  return s == Source::device ? "device" : "reference";
}

const char* rhythm_name(Rhythm r) {
  switch (r) {
    case Rhythm::sinus: return "SR";
    case Rhythm::afib: return "AF";
    case Rhythm::unknown: return "Unknown";
  }
  return "Unknown";
}

BeatSeries validate_series(std::vector<std::int64_t> timestamps, Source source,
                           const ValidationLimits& limits,
                           std::string subject_id, std::optional<Rhythm> rhythm) {
  if (timestamps.size() < 2)
    throw Error(errc::too_short, "beat series needs at least 2 beats, got " +
                                     std::to_string(timestamps.size()));

  BeatSeries s;
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const std::int64_t dt = timestamps[i] - timestamps[i - 1];
    if (dt <= 0)
      throw Error(errc::non_monotonic,
                  "timestamps not strictly increasing at beat " +
                      std::to_string(i) + " (" + std::to_string(timestamps[i - 1]) +
                      " -> " + std::to_string(timestamps[i]) + ")");
    if (dt < limits.min_interval_ms || dt > limits.max_interval_ms) {
      if (limits.strict)
        throw Error(errc::physiologically_invalid,
                    "interval of " + std::to_string(dt) + " ms at beat " +
                        std::to_string(i) + " outside [" +
                        std::to_string(limits.min_interval_ms) + ", " +
                        std::to_string(limits.max_interval_ms) + "] ms");
      s.flagged_.push_back(i);
    }
  }

  s.timestamps_ = std::move(timestamps);
  s.source_ = source;
  s.subject_id_ = std::move(subject_id);
  s.rhythm_ = rhythm;
  return s;
}

IntervalView intervals(const BeatSeries& series) {
  const auto& ts = series.timestamps_ms();
  if (ts.size() < 2)
    throw Error(errc::too_short, "need at least 2 beats to form intervals");
  IntervalView v;
  v.intervals_ms.reserve(ts.size() - 1);
  v.end_timestamps_ms.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    v.intervals_ms.push_back(ts[i] - ts[i - 1]);
    v.end_timestamps_ms.push_back(ts[i]);
  }
  return v;
}

std::vector<MinuteWindow> windows(const BeatSeries& series,
                                  std::int64_t window_len_ms) {
  if (window_len_ms <= 0)
    throw Error(errc::invalid_config, "window length must be positive");

  const std::int64_t span = series.span_ms();
  const std::size_t count =
      static_cast<std::size_t>((span + window_len_ms - 1) / window_len_ms);

  std::vector<MinuteWindow> wins;
  wins.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    MinuteWindow w;
    w.index = i;
    w.start_ms = series.front_ms() + static_cast<std::int64_t>(i) * window_len_ms;
    w.end_ms = w.start_ms + window_len_ms;
    w.partial = (i + 1 == count) && (span % window_len_ms != 0);
    wins.push_back(w);
  }
  return wins;
}

std::size_t window_index_of(std::span<const MinuteWindow> wins, std::int64_t t_ms) {
  if (wins.empty()) return 0;
  if (t_ms < wins.front().start_ms) return 0;
  const std::int64_t len = wins.front().end_ms - wins.front().start_ms;
  const std::size_t idx =
      static_cast<std::size_t>((t_ms - wins.front().start_ms) / len);
  return std::min(idx, wins.size() - 1);
}

BeatSeries crop(const BeatSeries& series, std::int64_t lo_ms, std::int64_t hi_ms) {
  std::vector<std::int64_t> kept;
  for (std::int64_t t : series.timestamps_ms())
    if (t >= lo_ms && t <= hi_ms) kept.push_back(t);
  ValidationLimits lenient;
  lenient.strict = false;
  return validate_series(std::move(kept), series.source(), lenient,
                         series.subject_id(), series.rhythm_label());
}

}  // namespace ibival
