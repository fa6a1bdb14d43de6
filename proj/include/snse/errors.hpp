#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snse {

/// Invalid grid or solver configuration (e.g. grid too coarse to dealias).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range model parameter (epsilon, thresholds, constants).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed field data: broken conjugate symmetry, mismatched grids, wrong sizes.
class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time integration failure. Carries the step at which it was detected.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace snse
