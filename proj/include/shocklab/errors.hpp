#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace shocklab {

// Caller broke a precondition (bad argument, misuse of an API).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Structurally valid input that cannot be computed with (e.g. a contour
// radius sitting on a pole).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical non-convergence. Carries a diagnostic report.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::string report = {})
      : std::runtime_error(what), report_(std::move(report)) {}
  const std::string& report() const noexcept { return report_; }

 private:
  std::string report_;
};

}  // namespace shocklab
