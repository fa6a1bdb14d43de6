#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace snse::detail {

struct LbfgsOptions {
  std::size_t max_iterations = 400;
  std::size_t memory = 12;
  double gradient_tol = 1e-10;  ///< relative to the initial gradient norm
};

struct LbfgsResult {
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::string status;
};

/// f(x, grad) returns the value and fills grad.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory BFGS with a backtracking Armijo line search (quadratic/cubic interpolation).
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double>& x, const LbfgsOptions& options);

}  // namespace snse::detail
