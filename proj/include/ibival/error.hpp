#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ibival {

enum class errc {
  non_monotonic,
  too_short,
  physiologically_invalid,
  no_overlap,
  degenerate_search,
  empty_series,
  empty_pair_set,
  single_class,
  invalid_config,
  parse_error,
  consistency_error,
};

const char* errc_name(errc code);

/// Single exception type for all data and configuration failures.
/// File loaders attach the offending 1-based line number.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(line ? message + " (line " + std::to_string(*line) + ")"
                                : message),
        code_(code),
        line_(line) {}

  errc code() const { return code_; }
  std::optional<std::size_t> line() const { return line_; }

private:
  errc code_;
  std::optional<std::size_t> line_;
};

}  // namespace ibival
