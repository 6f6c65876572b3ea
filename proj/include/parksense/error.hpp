#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace parksense {

enum class ErrorKind {
  InvalidGeometry,
  Kind,
  Ordering,
  State,
  Map,
  Domain,
  Range,
  Parse,
  Routing,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure the library reports. `line()` is set for errors raised while
/// parsing line-oriented inputs (wire logs, CSVs, scenario and map files).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace parksense
