#pragma once

#include <functional>
#include <vector>

#include "snse/solvers.hpp"

namespace snse::detail {

/// Discrete skeleton map h -> (X_0..X_M) and its adjoint, step for step the same arithmetic as
/// solve_skeleton:
///   X_{m+1} = E X_m + Phi (L_m X_m + S_m h_m),  L_m X = -B(X,u0_m) - B(u0_m,X),
///   S_m h = m(||u0_m||) sum_j g_j h_j e_j.
class SkeletonOperator {
 public:
  SkeletonOperator(const Trajectory& u0_traj, const SimConfig& config);

  const SimConfig& config() const { return config_; }
  const StepWeights& weights() const { return weights_; }
  std::size_t steps() const { return steps_; }
  std::size_t num_modes() const { return config_.noise.num_modes(); }

  std::vector<SpectralField> forward(const Control& h) const;

  /// Gradient in h of sum_m (G_m, X_m(h))_H, where seed(m) returns G_m or nullptr for zero.
  Control adjoint(const std::function<const SpectralField*(std::size_t)>& seed) const;

 private:
  const Trajectory* u0_;
  SimConfig config_;
  StepWeights weights_;
  std::size_t steps_;
  std::vector<double> multiplier_;  // m(||u0_m||)
  std::vector<double> gain_;
};

/// u scaled mode by mode: w[i] * u_i.
SpectralField scale_modes(const SpectralField& u, const std::vector<double>& w);

}  // namespace snse::detail
