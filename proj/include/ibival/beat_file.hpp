#pragma once

#include <filesystem>

#include "ibival/types.hpp"

namespace ibival {

/// Reads a beat CSV: optional `# key: value` metadata comments (subject_id,
/// source, rhythm), a `timestamp_ms[,interval_ms]` header, one beat per row.
/// When the interval column is present every value must equal the timestamp
/// difference exactly; mismatches raise consistency_error with the row's line
/// number. Timestamps in files must be non-negative.
BeatSeries load_beat_file(const std::filesystem::path& path,
                          const ValidationLimits& limits = {});

/// Writes the matching CSV (atomically: temp file then rename). Round-trips
/// with load_beat_file.
void write_beat_file(const BeatSeries& series, const std::filesystem::path& path,
                     bool with_intervals = true);

}  // namespace ibival
