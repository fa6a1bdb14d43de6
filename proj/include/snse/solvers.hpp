#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snse/field.hpp"
#include "snse/noise.hpp"
#include "snse/rng.hpp"

namespace snse {

/// f(t) = field * cos(frequency * t); absent field means f = 0.
struct Forcing {
  std::optional<SpectralField> field;
  double frequency = 0.0;

  bool active() const { return field.has_value(); }
  SpectralField at(const SpectralGrid& grid, double t) const;
};

struct SimConfig {
  SimConfig(SpectralGrid grid, NoiseModel noise)
      : grid(grid), initial(grid), noise(std::move(noise)) {}

  SpectralGrid grid;
  double horizon = 1.0;
  double dt = 1e-3;
  double epsilon = 0.0;
  bool nonlinear = true;  ///< false drops B (linear regime)
  SpectralField initial;
  Forcing forcing;
  NoiseModel noise;
  std::size_t record_stride = 1;
  double blowup_factor = 1e6;
  std::string config_hash;  ///< provenance only

  /// Number of steps T/dt; throws ConfigError unless dt > 0 and T/dt is integral.
  std::size_t steps() const;
  void validate() const;
};

/// Per-mode exponential integrator weights for step dt, indexed like the coefficient box.
struct StepWeights {
  StepWeights(const SpectralGrid& grid, double dt);

  double dt;
  std::vector<double> decay;   ///< e^{-|k|^2 dt}
  std::vector<double> phi;     ///< (1 - e^{-|k|^2 dt}) / |k|^2
  std::vector<double> noise;   ///< sqrt((1 - e^{-2|k|^2 dt}) / (2 |k|^2 dt))
  std::vector<double> energy;  ///< (1 - e^{-2|k|^2 dt}) / 2, weight of |u_k|^2 in int ||u||^2
};

/// Contribution of one step to int ||u||^2 ds, exact for Stokes decay over the step.
double step_dissipation(const SpectralField& u, const StepWeights& w);

/// e^{-A dt} u + phi(A, dt) rhs.
SpectralField exponential_update(const SpectralField& u, const SpectralField& rhs, const StepWeights& w);

/// One integrating-factor step of du + Au dt + B(u,u) dt = f dt.
/// Throws IntegrationError on non-finite output.
SpectralField step_deterministic(const SpectralField& u, const SpectralField& f_t, double dt,
                                 bool nonlinear = true);
SpectralField step_deterministic(const SpectralField& u, const SpectralField* f_t, const StepWeights& w,
                                 bool nonlinear);

/// One semi-implicit Euler-Maruyama step of the SNSE with Ito (left-point) noise
/// sqrt(eps) sigma(t,u) dW. eps = 0 is bit-identical to step_deterministic.
SpectralField step_snse(const SpectralField& u, const SpectralField& f_t, double eps,
                        std::span<const double> dW, double dt, const NoiseModel& noise, double t,
                        bool nonlinear = true);
SpectralField step_snse(const SpectralField& u, const SpectralField* f_t, double eps,
                        std::span<const double> dW, const StepWeights& w, const NoiseModel& noise,
                        double t, bool nonlinear);

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string kind;  ///< "u0", "u_eps", "skeleton", "tilde_z", "z"
};

/// Recorded frames plus running functionals computed at solver resolution.
struct Trajectory {
  explicit Trajectory(SpectralGrid grid) : grid(grid) {}

  SpectralGrid grid;
  double dt = 0.0;           ///< solver step
  std::size_t stride = 1;    ///< solver steps per record
  std::vector<double> times;
  std::vector<SpectralField> frames;
  std::vector<double> running_sup_h_sq;  ///< sup_{s<=t} |u(s)|^2 at each record
  std::vector<double> running_int_v_sq;  ///< int_0^t ||u||^2 at each record
  Provenance provenance;

  std::size_t size() const { return frames.size(); }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

/// Observer called with each state u(t_m), m = 0..M, and the increment used to leave it
/// (empty at the final state).
using StepObserver = std::function<void(std::size_t step, double t, const SpectralField& u,
                                        std::span<const double> dW)>;

/// Recorder that builds a Trajectory from observer callbacks.
class TrajectoryRecorder {
 public:
  TrajectoryRecorder(const SimConfig& config, Provenance provenance);
  void operator()(std::size_t step, double t, const SpectralField& u);
  Trajectory take() { return std::move(traj_); }

 private:
  StepWeights weights_;
  std::size_t steps_;
  Trajectory traj_;
  double sup_ = 0.0;
  double integral_ = 0.0;
};

Trajectory solve_deterministic(const SimConfig& config);
Trajectory solve_snse(const SimConfig& config, std::uint64_t seed);
/// Drives the SNSE with an explicit normal stream (NormalStream::zeros() for the degenerate
/// test mode) and reports every state to `observer`.
void simulate_snse(const SimConfig& config, NormalStream& rng, const StepObserver& observer);

/// Skeleton equation dX + AX = -B(X,u0) - B(u0,X) + sigma(t,u0) h, X(0) = 0.
/// u0_traj must be recorded at every solver step; h on the solver grid.
Trajectory solve_skeleton(const Control& h, const Trajectory& u0_traj, const SimConfig& config);

/// loglog(1/eps); throws ParameterError unless eps in (0, e^{-e}).
double loglog_inverse(double eps);

/// Girsanov-shifted process
///   dZ = [-AZ - B(u_eps, Z) - B(Z, u0) + s(t,Z) h] dt + (2 loglog 1/eps)^{-1/2} s(t,Z) dW,
///   s(t,z) = sigma(t, sqrt(2 eps loglog 1/eps) z + u0(t)),  Z(0) = 0.
/// With u_eps_traj == nullptr the B term uses u_eps = u0 + sqrt(2 eps loglog) Z.
Trajectory solve_tilde_z(const Control& h, const Trajectory* u_eps_traj, const Trajectory& u0_traj,
                         double eps, std::uint64_t seed, const SimConfig& config);
Trajectory solve_tilde_z(const Control& h, const Trajectory* u_eps_traj, const Trajectory& u0_traj,
                         double eps, NormalStream& rng, const SimConfig& config,
                         const StepObserver& observer = {});

/// sup_t |u(t) - ref(t)|^2 and int ||u - ref||^2 accumulated step by step, with the same
/// quadrature as the running trajectory functionals.
class DeviationAccumulator {
 public:
  DeviationAccumulator(const StepWeights& weights, std::size_t steps)
      : weights_(&weights), steps_(steps) {}
  void add(std::size_t step, const SpectralField& diff);
  double sup_h_sq() const { return sup_; }
  double int_v_sq() const { return integral_; }
  double energy_norm() const;

 private:
  const StepWeights* weights_;
  std::size_t steps_;
  double sup_ = 0.0;
  double integral_ = 0.0;
};

}  // namespace snse
