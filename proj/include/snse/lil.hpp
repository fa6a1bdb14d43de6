#pragma once

#include <optional>
#include <vector>

#include "snse/deviation.hpp"

namespace snse {

/// eps_j = c^{-j} for j in [j_min, j_max].
struct LilSchedule {
  double base = 2.0;
  int j_min = 4;
  int j_max = 12;

  double eps(int j) const { return std::pow(base, -j); }
  std::vector<double> eps_grid() const;
  /// Throws ParameterError unless c > 1, j_min <= j_max and every eps_j < e^{-e}. With eps0 given,
  /// also requires j_min > log(1/eps0) / log c.
  void validate(std::optional<double> eps0 = std::nullopt) const;
};

/// Z = (u^eps - u0) / sqrt(2 eps loglog(1/eps)), with running functionals recomputed on the
/// recording grid. Throws ParameterError for eps outside (0, e^{-e}).
Trajectory z_process(const Trajectory& u_eps, const Trajectory& u0, double eps);

/// Finite family of controls with (1/2) energy <= 1 and their skeleton images, a refinable
/// inner approximation of the limit set {g : I(g) <= 1}.
class LimitSetProbe {
 public:
  /// u0_traj recorded at every solver step; images use config.record_stride.
  LimitSetProbe(const Trajectory& u0_traj, const SimConfig& config, double tolerance);

  /// Zero plus +-sin(pi q t / T) e_j for the first `modes` directions and q = 1..harmonics,
  /// each on the boundary (1/2) energy = 1.
  static LimitSetProbe sinusoid_family(const Trajectory& u0_traj, const SimConfig& config, std::size_t modes,
                                       std::size_t harmonics, double tolerance);

  /// Adds a candidate; throws ParameterError when (1/2) energy(h) > 1 + 1e-12.
  std::size_t add(const Control& h);

  std::size_t size() const { return images_.size(); }
  double tolerance() const { return tolerance_; }
  const Control& control(std::size_t i) const { return controls_.at(i); }
  const Trajectory& image(std::size_t i) const { return images_.at(i); }

 private:
  const Trajectory* u0_;
  SimConfig config_;
  double tolerance_;
  std::vector<Control> controls_;
  std::vector<Trajectory> images_;
};

struct LimitDistance {
  double distance = 0.0;
  std::size_t nearest = 0;
};

/// min_i ||z - g_i||_E(T); an upper bound on the distance to the limit set.
LimitDistance limit_set_distance(const Trajectory& z, const LimitSetProbe& probe);

struct ClusterReport {
  std::vector<int> j;
  std::vector<double> eps;
  std::vector<std::vector<double>> distance;      ///< [replicate][j]
  std::vector<std::vector<std::size_t>> nearest;  ///< [replicate][j]
  std::vector<double> hit_fraction;  ///< per candidate: share of (replicate, j) within tolerance
  std::vector<double> running_max;   ///< per replicate: max over j of the distance
};

/// Each replicate reuses one Brownian path (stream (seed, replicate)) for every eps_j.
ClusterReport strassen_cluster_study(const LilSchedule& schedule, const LimitSetProbe& probe,
                                     const SimConfig& config, const McOptions& options);

struct RatioReport {
  std::vector<int> j;
  std::vector<double> eps;
  std::vector<std::vector<double>> ratio;  ///< [replicate][j]
  std::vector<double> running_max;         ///< per replicate
  std::vector<double> running_min;         ///< per replicate
  std::vector<double> mean;                ///< per j
  std::vector<std::array<double, 3>> quantiles;  ///< per j: 10%, 50%, 90%
  LinearFit trend;                         ///< mean ratio against j
};

/// ||u^{eps_j} - u0||_E(T) / sqrt(2 eps_j loglog(1/eps_j)) per replicate and j; the limits of the
/// classical statement are reported, not asserted.
RatioReport classical_ratio_study(const LilSchedule& schedule, const SimConfig& config, const McOptions& options);

}  // namespace snse
