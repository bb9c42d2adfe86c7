#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oamreg {

enum class ErrorCategory {
  invalid_argument,
  dimension_mismatch,
  incompatible,
  io,
  format,
  numerical,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::dimension_mismatch: return "dimension-mismatch";
    case ErrorCategory::incompatible: return "incompatible";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::numerical: return "numerical";
  }
  return "unknown";
}

// Process exit code used by the command-line front end for each category.
inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return 2;
    case ErrorCategory::dimension_mismatch: return 4;
    case ErrorCategory::incompatible: return 4;
    case ErrorCategory::io: return 3;
    case ErrorCategory::format: return 5;
    case ErrorCategory::numerical: return 6;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

inline void require(bool condition, ErrorCategory category, const std::string& what) {
  if (!condition) fail(category, what);
}

}  // namespace oamreg
