#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maps {

/// Coarse failure category. The CLI prints it as the first token of its
/// one-line error message, so the names are part of the external interface.
enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  config,
  io,
  format,
  divergence,
  expert_failure,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace maps
