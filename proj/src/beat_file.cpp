#include "ibival/beat_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace ibival {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::int64_t parse_int(std::string_view field, std::size_t line) {
  field = trim(field);
  std::int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw Error(errc::parse_error,
                "expected an integer, got '" + std::string(field) + "'", line);
  return value;
}

}  // namespace

BeatSeries load_beat_file(const std::filesystem::path& path,
                          const ValidationLimits& limits) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::parse_error, "cannot open '" + path.string() + "'");

  std::string subject_id;
  Source source = Source::device;
  std::optional<Rhythm> rhythm;

  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool has_interval_column = false;
  std::vector<std::int64_t> timestamps;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '#') {
      line.remove_prefix(1);
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string_view key = trim(line.substr(0, colon));
      const std::string_view value = trim(line.substr(colon + 1));
      if (key == "subject_id") {
        subject_id = std::string(value);
      } else if (key == "source") {
        if (value == "device") source = Source::device;
        else if (value == "reference") source = Source::reference;
        else throw Error(errc::parse_error,
                         "unknown source '" + std::string(value) + "'", line_no);
      } else if (key == "rhythm") {
        if (value == "SR") rhythm = Rhythm::sinus;
        else if (value == "AF") rhythm = Rhythm::afib;
        else if (value == "Unknown") rhythm = Rhythm::unknown;
        else throw Error(errc::parse_error,
                         "unknown rhythm '" + std::string(value) + "'", line_no);
      }
      continue;
    }

    if (!header_seen) {
      if (line == "timestamp_ms") {
        has_interval_column = false;
      } else if (line == "timestamp_ms,interval_ms") {
        has_interval_column = true;
      } else {
        throw Error(errc::parse_error,
                    "expected header 'timestamp_ms[,interval_ms]'", line_no);
      }
      header_seen = true;
      continue;
    }

    std::string_view ts_field = line;
    std::string_view interval_field;
    const auto comma = line.find(',');
    if (comma != std::string_view::npos) {
      if (!has_interval_column)
        throw Error(errc::parse_error, "unexpected second column", line_no);
      ts_field = line.substr(0, comma);
      interval_field = trim(line.substr(comma + 1));
    }

    const std::int64_t ts = parse_int(ts_field, line_no);
    if (ts < 0)
      throw Error(errc::parse_error, "timestamps in files must be non-negative",
                  line_no);

    if (has_interval_column && !interval_field.empty()) {
      const std::int64_t declared = parse_int(interval_field, line_no);
      if (timestamps.empty())
        throw Error(errc::consistency_error,
                    "first beat cannot declare an interval", line_no);
      const std::int64_t actual = ts - timestamps.back();
      if (declared != actual)
        throw Error(errc::consistency_error,
                    "interval_ms " + std::to_string(declared) +
                        " does not match timestamp difference " +
                        std::to_string(actual),
                    line_no);
    } else if (has_interval_column && interval_field.empty() &&
               !timestamps.empty()) {
      throw Error(errc::consistency_error,
                  "only the first beat may omit interval_ms", line_no);
    }

    timestamps.push_back(ts);
  }

  if (!header_seen)
    throw Error(errc::parse_error, "missing 'timestamp_ms' header");

  return validate_series(std::move(timestamps), source, limits, subject_id,
                         rhythm);
}

void write_beat_file(const BeatSeries& series, const std::filesystem::path& path,
                     bool with_intervals) {
  std::ostringstream out;
  if (!series.subject_id().empty())
    out << "# subject_id: " << series.subject_id() << "\n";
  out << "# source: " << source_name(series.source()) << "\n";
  if (series.rhythm_label())
    out << "# rhythm: " << rhythm_name(*series.rhythm_label()) << "\n";

  const auto& ts = series.timestamps_ms();
  if (with_intervals) {
    out << "timestamp_ms,interval_ms\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
      out << ts[i] << ',';
      if (i > 0) out << (ts[i] - ts[i - 1]);
      out << '\n';
    }
  } else {
    out << "timestamp_ms\n";
    for (std::int64_t t : ts) out << t << '\n';
  }

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw Error(errc::parse_error, "cannot write '" + tmp.string() + "'");
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ibival
