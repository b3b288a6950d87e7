#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace unlearn {

using Vec = Eigen::VectorXd;

// Invalid configuration or input file (CLI exit code 1).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A theorem precondition does not hold; no bound is produced (CLI exit code 1).
struct certification_error : std::runtime_error {
  explicit certification_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterates diverged or became non-finite (CLI exit code 3).
struct numeric_error : std::runtime_error {
  numeric_error(const std::string& msg, std::int64_t at_step)
      : std::runtime_error(msg + " (step " + std::to_string(at_step) + ")"), step(at_step) {}
  std::int64_t step;
};

// Required precomputed state is missing (e.g. checkpoint before unlearning).
struct state_error : std::runtime_error {
  explicit state_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kDivergenceNormLimit = 1e12;

}  // namespace unlearn
