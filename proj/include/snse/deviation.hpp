#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "snse/solvers.hpp"
#include "snse/stats.hpp"

namespace snse {

namespace detail {
class SkeletonOperator;
}

/// Lemma constants K1..K9 (index 0 holds K1).
struct ConstantsLedger {
  std::array<double, 9> K{1, 1, 1, 1, 1, 1, 1, 1, 1};

  double k(int i) const { return K.at(static_cast<std::size_t>(i - 1)); }
};

struct EpsilonThresholds {
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
};

/// eps0 = min{1/(2K1^2), 1/(4K1), 1/(2K2), 1/(78K9)}; eps1 swaps 1/(78K9) for 1/(36K9);
/// eps2 = min{eps1 terms, 1/(K9(36p+2))}. Throws ParameterError on nonpositive K or p < 1.
EpsilonThresholds epsilon_thresholds(const ConstantsLedger& ledger, double p = 1.0);

/// Squared E(T) norm of recorded frames: sup |u_r|^2 + sum_r w(t_{r+1} - t_r) ||u_r||^2, using the
/// solver's exponential quadrature on the recording grid.
double energy_norm_sq(std::span<const SpectralField> frames, std::span<const double> times);
/// (sup_t |u|^2 + int_0^T ||u||^2)^{1/2} on the trajectory's recording grid.
double energy_norm(const Trajectory& traj);
/// E(T) distance between two trajectories recorded on the same grid.
double energy_distance(const Trajectory& a, const Trajectory& b);

/// Path i of an MC ensemble draws from NormalStream(seed, i).
struct McOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;  ///< 0 = hardware concurrency
};

Trajectory sample_snse(const SimConfig& config, std::uint64_t seed, std::size_t path);

struct ProbabilityEstimate {
  std::size_t hits = 0;
  std::size_t samples = 0;
  double estimate = 0.0;
  Interval wilson;
  /// Zero hits: one-sided 95% bound 1 - 0.05^{1/n}; otherwise equal to wilson.hi.
  double upper_bound = 1.0;

  bool zero_hits() const { return hits == 0; }
  /// log of the estimate, or of the one-sided bound when there were no hits.
  double log_estimate() const;
};

ProbabilityEstimate make_estimate(std::size_t hits, std::size_t samples);

using TrajectoryEvent = std::function<bool(const Trajectory&)>;

/// Indicator mean of `event` over independent paths of the SNSE at noise level eps.
ProbabilityEstimate mc_probability(const TrajectoryEvent& event, double eps, const SimConfig& config,
                                   const McOptions& options);

/// ||u^eps - u0||_E(T) for every path, computed at solver resolution.
/// u0_traj must be recorded at every step.
std::vector<double> deviation_norms(double eps, const SimConfig& config, const Trajectory& u0_traj,
                                    const McOptions& options);

// ---------------------------------------------------------------- rate function

struct RateOptions {
  double feasibility_tol = 1e-4;  ///< on the E(T) residual
  double energy_cap = 1e3;        ///< on (1/2) control energy
  double penalty_start = 1e2;
  double penalty_growth = 10.0;
  double penalty_max = 1e14;
  double sharpness = 50.0;  ///< soft-max sharpness, relative to sup_t |v|^2
  std::size_t max_iterations = 400;  ///< quasi-Newton iterations per penalty level
  std::size_t memory = 12;
};

struct RateResult {
  bool feasible = false;
  double value = std::numeric_limits<double>::infinity();  ///< I(v); infinite when infeasible
  double half_energy = 0.0;  ///< (1/2) control_energy(h*) of the best iterate
  Control control{0.0, 0, 0};  ///< h*
  double residual = 0.0;     ///< E(T) distance between X^{h*} and v on v's recording grid
  double penalty = 0.0;      ///< final penalty weight
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double gradient_norm = 0.0;
  std::string status;
};

/// Penalized rate objective
///   J(h) = (1/2) energy(h) + (mu/2) [ softmax_r |X_r - v_r|^2 + sum_r w ||X_r - v_r||^2 ]
/// over records r of the target, with its adjoint gradient.
class RateProblem {
 public:
  RateProblem(const Trajectory& target, const Trajectory& u0_traj, const SimConfig& config, double penalty,
              double sharpness = 50.0);

  std::size_t steps() const { return steps_; }
  std::size_t num_modes() const { return num_modes_; }
  void set_penalty(double mu) { penalty_ = mu; }

  /// Objective; writes dJ/dh into gradient when non-null.
  double objective(const Control& h, Control* gradient) const;
  /// Exact E(T) residual of X^h against the target.
  double residual(const Control& h) const;

 private:
  std::shared_ptr<const detail::SkeletonOperator> op_;
  const Trajectory* target_;
  std::vector<std::size_t> record_steps_;
  StepWeights record_weights_;
  std::size_t steps_;
  std::size_t num_modes_;
  double penalty_;
  double beta_;
};

RateResult rate_function(const Trajectory& target, const Trajectory& u0_traj, const SimConfig& config,
                         const RateOptions& options = {});

/// Lambda = sup over h with energy(h) = 1 of ||X^h||_E(T)^2, so that
/// inf{ I(v) : ||v||_E >= r } = r^2 / (2 Lambda). The sup over t of |X(t)|^2 is searched on
/// `probe_times` evenly spaced times and refined around the best one.
struct ResponseBound {
  double lambda = 0.0;
  double peak_time = 0.0;
  Control direction{0.0, 0, 0};  ///< maximizing unit-energy control
};
ResponseBound skeleton_response_bound(const Trajectory& u0_traj, const SimConfig& config,
                                      std::size_t probe_times = 16, std::size_t iterations = 200);

// ---------------------------------------------------------------- MDP probe

/// Speed function a(eps). loglog: a = (2 loglog 1/eps)^{-1/2}; power: a = eps^gamma, 0 < gamma < 1/2.
/// Both satisfy a -> 0 and a / sqrt(eps) -> infinity.
struct SpeedFunction {
  enum class Kind { loglog, power };
  Kind kind = Kind::loglog;
  double gamma = 0.25;

  double operator()(double eps) const;
  void validate() const;
};

struct ScalingRow {
  double eps = 0.0;
  double a = 0.0;
  double threshold = 0.0;  ///< r sqrt(eps) / a, the cut on ||u^eps - u0||_E
  ProbabilityEstimate probability;
  double scaled_log = 0.0;  ///< a^2 log P (bound when no hits)
  double gap = 0.0;         ///< scaled_log + I*
};

struct ScalingReport {
  double radius = 0.0;
  double rate = 0.0;  ///< I* = inf{ I(v) : ||v||_E >= r }
  double lambda = 0.0;
  std::vector<ScalingRow> rows;  ///< in grid order
  LinearFit trend;               ///< |gap| against a^2
  bool gap_shrinks = false;      ///< |gap| nonincreasing along the grid (eps decreasing)
};

ScalingReport mdp_scaling_probe(double r, std::span<const double> eps_grid, const SpeedFunction& a,
                                const SimConfig& config, const McOptions& options);

// ---------------------------------------------------------------- FW probe

struct FWConfig {
  double rho = 1.0;
  double eta = 1.0;
  double R = 1.0;
  double beta = 0.0;  ///< increment threshold; 0 drops the increment event
  int depth = 0;      ///< dyadic depth n
  std::vector<double> eps_grid;
  std::size_t samples = 1000;  ///< paths per eps; McOptions supplies seed and workers

  void validate(double eps0 = std::exp(-std::numbers::e)) const;
};

struct FWRow {
  double eps = 0.0;
  double loglog = 0.0;
  ProbabilityEstimate joint;       ///< deviation AND closeness (AND increment)
  ProbabilityEstimate closeness;   ///< noise closeness alone
  ProbabilityEstimate deviation;   ///< deviation alone
  ProbabilityEstimate conditional; ///< joint hits among closeness hits
  double bound = 0.0;              ///< exp(-2 R loglog 1/eps)
  bool below_bound = false;
};

struct FWReport {
  std::vector<FWRow> rows;
  bool below_at_smallest = false;
};

FWReport fw_conditional_probe(const Control& h, const FWConfig& fw, const SimConfig& config,
                              const McOptions& options);

/// E(T) norm of t -> u(t) - u(t_i^n), t_i^n the dyadic left neighbour of t on the recording grid.
/// Throws ParameterError when 2^n exceeds the number of recorded steps.
double dyadic_increment_stat(const Trajectory& traj, int depth);

// ---------------------------------------------------------------- moment bounds

struct MomentRow {
  std::string quantity;
  double p = 1.0;
  double eps = 0.0;
  Moments value;
};

struct MomentFit {
  std::string quantity;
  double p = 1.0;
  double stated_power = 0.0;
  double fitted_exponent = 0.0;
  double exponent_se = 0.0;
  double implied_constant = 0.0;  ///< max over the grid of mean / eps^stated_power
};

struct MomentReport {
  std::vector<MomentRow> rows;
  std::vector<MomentFit> fits;
  double k6 = 0.0;        ///< sup |u0|^2 + int ||u0||^2
  double k7 = 0.0;        ///< sup |u0|^2 * int ||u0||^2
  double l4_u0 = 0.0;     ///< int ||u0||_L4^4
  double skeleton = 0.0;  ///< max over probe controls in S_N of sup |X^h|^2 + int ||X^h||^2
};

struct MomentOptions {
  std::vector<double> eps_grid;
  std::vector<double> p_list{1.0, 2.0};
  double skeleton_level = 1.0;  ///< N in S_N = {energy(h) <= N}
  std::size_t skeleton_probes = 4;
  const ConstantsLedger* ledger = nullptr;  ///< when set, every eps must lie below eps0
};

MomentReport moment_bound_suite(const MomentOptions& moments, const SimConfig& config, const McOptions& options);

}  // namespace snse
