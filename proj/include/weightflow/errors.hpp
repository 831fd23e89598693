#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wf {

// Raised for invalid configuration or argument values (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
  ConfigError(const std::string& msg, std::vector<std::string> details)
      : std::runtime_error(msg), details_(std::move(details)) {}
  const std::vector<std::string>& details() const { return details_; }

 private:
  std::vector<std::string> details_;
};

// Raised when a computation leaves its numerical contract (CLI exit code 2):
// kernel floor violations, non-finite values, quadrature non-convergence.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wf
