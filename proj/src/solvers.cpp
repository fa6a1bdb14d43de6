#include "snse/solvers.hpp"

#include <cmath>
#include <numbers>

#include "snse/errors.hpp"

namespace snse {
namespace {

// u += scale * w_k * sigma(t, at) dW, mode by mode.
void add_noise(ModeCoefficients& c, const NoiseModel& noise, double multiplier, double scale,
               std::span<const double> dW, const StepWeights& w) {
  const auto dirs = noise.directions();
  if (dW.size() != dirs.size()) throw FieldError("noise increment has the wrong dimension");
  std::vector<double> coords(dW.size());
  for (std::size_t j = 0; j < dW.size(); ++j) coords[j] = multiplier * dirs[j].gain * dW[j];
  const SpectralField kick = noise.synthesize(coords);
  for (std::size_t i = 0; i < c.c1.size(); ++i) {
    const double s = scale * w.noise[i];
    c.c1[i] += s * kick.c1()[i];
    c.c2[i] += s * kick.c2()[i];
  }
}

void require_finite(const SpectralField& u, std::size_t step) {
  const double e = h_norm_sq(u);
  if (!std::isfinite(e)) throw IntegrationError("non-finite state", step);
}

const SpectralField* forcing_ptr(const SimConfig& config, double t, std::optional<SpectralField>& slot) {
  if (!config.forcing.active()) return nullptr;
  slot = config.forcing.at(config.grid, t);
  return &*slot;
}

ModeCoefficients exponential_coeffs(const SpectralField& u, const SpectralField* rhs, const StepWeights& w) {
  ModeCoefficients c = u.coefficients();
  for (std::size_t i = 0; i < c.c1.size(); ++i) {
    c.c1[i] *= w.decay[i];
    c.c2[i] *= w.decay[i];
  }
  if (rhs != nullptr) {
    for (std::size_t i = 0; i < c.c1.size(); ++i) {
      c.c1[i] += w.phi[i] * rhs->c1()[i];
      c.c2[i] += w.phi[i] * rhs->c2()[i];
    }
  }
  return c;
}

std::optional<SpectralField> deterministic_rhs(const SpectralField& u, const SpectralField* f_t,
                                               bool nonlinear) {
  if (nonlinear) {
    SpectralField rhs = bilinear_B(u, u) * -1.0;
    if (f_t != nullptr) rhs = rhs + *f_t;
    return rhs;
  }
  if (f_t != nullptr) return *f_t;
  return std::nullopt;
}

void require_companion(const Trajectory& traj, const SimConfig& config, const char* what) {
  if (!(traj.grid == config.grid)) throw FieldError(std::string(what) + ": grid mismatch");
  if (traj.stride != 1 || traj.size() != config.steps() + 1 ||
      std::abs(traj.dt - config.dt) > 1e-15 * std::max(1.0, config.dt)) {
    throw FieldError(std::string(what) + ": companion trajectory must be recorded at every solver step");
  }
}

}  // namespace

SpectralField Forcing::at(const SpectralGrid& grid, double t) const {
  if (!field) return SpectralField(grid);
  return frequency == 0.0 ? *field : *field * std::cos(frequency * t);
}

std::size_t SimConfig::steps() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (horizon < 0.0) throw ConfigError("horizon must be >= 0");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) throw ConfigError("T/dt must be integral");
  return static_cast<std::size_t>(rounded);
}

void SimConfig::validate() const {
  (void)steps();
  if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  if (record_stride == 0) throw ConfigError("record_stride must be >= 1");
  if (!(initial.grid() == grid) || !(noise.grid() == grid)) throw ConfigError("config components disagree on grid");
  if (forcing.field && !(forcing.field->grid() == grid)) throw ConfigError("forcing grid mismatch");
  if (nonlinear) grid.require_dealiasing();
}

StepWeights::StepWeights(const SpectralGrid& grid, double step) : dt(step) {
  const std::size_t n = grid.size();
  decay.resize(n);
  phi.resize(n);
  noise.resize(n);
  energy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = grid.wavenumber(i).norm_sq();
    if (a == 0.0) {
      decay[i] = 1.0;
      phi[i] = dt;
      noise[i] = 1.0;
      energy[i] = 0.0;
      continue;
    }
    decay[i] = std::exp(-a * dt);
    phi[i] = -std::expm1(-a * dt) / a;
    const double two = -std::expm1(-2.0 * a * dt);
    noise[i] = dt > 0.0 ? std::sqrt(two / (2.0 * a * dt)) : 1.0;
    energy[i] = 0.5 * two;
  }
}

double step_dissipation(const SpectralField& u, const StepWeights& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += w.energy[i] * (std::norm(u.c1()[i]) + std::norm(u.c2()[i]));
  }
  return SpectralGrid::kArea * s;
}

SpectralField exponential_update(const SpectralField& u, const SpectralField& rhs, const StepWeights& w) {
  return SpectralField::unchecked(u.grid(), exponential_coeffs(u, &rhs, w));
}

SpectralField step_deterministic(const SpectralField& u, const SpectralField* f_t, const StepWeights& w,
                                 bool nonlinear) {
  const auto rhs = deterministic_rhs(u, f_t, nonlinear);
  SpectralField out = SpectralField::unchecked(u.grid(), exponential_coeffs(u, rhs ? &*rhs : nullptr, w));
  require_finite(out, 0);
  return out;
}

SpectralField step_deterministic(const SpectralField& u, const SpectralField& f_t, double dt, bool nonlinear) {
  return step_deterministic(u, &f_t, StepWeights(u.grid(), dt), nonlinear);
}

SpectralField step_snse(const SpectralField& u, const SpectralField* f_t, double eps,
                        std::span<const double> dW, const StepWeights& w, const NoiseModel& noise,
                        double t, bool nonlinear) {
  if (eps == 0.0) return step_deterministic(u, f_t, w, nonlinear);
  if (eps < 0.0) throw ParameterError("step_snse: eps must be >= 0");
  const auto rhs = deterministic_rhs(u, f_t, nonlinear);
  ModeCoefficients c = exponential_coeffs(u, rhs ? &*rhs : nullptr, w);
  (void)t;
  add_noise(c, noise, noise.multiplier(u), std::sqrt(eps), dW, w);
  SpectralField out = SpectralField::unchecked(u.grid(), std::move(c));
  require_finite(out, 0);
  return out;
}

SpectralField step_snse(const SpectralField& u, const SpectralField& f_t, double eps,
                        std::span<const double> dW, double dt, const NoiseModel& noise, double t,
                        bool nonlinear) {
  return step_snse(u, &f_t, eps, dW, StepWeights(u.grid(), dt), noise, t, nonlinear);
}

TrajectoryRecorder::TrajectoryRecorder(const SimConfig& config, Provenance provenance)
    : weights_(config.grid, config.dt), steps_(config.steps()), traj_(config.grid) {
  traj_.dt = config.dt;
  traj_.stride = config.record_stride;
  traj_.provenance = std::move(provenance);
  if (traj_.provenance.config_hash.empty()) traj_.provenance.config_hash = config.config_hash;
}

void TrajectoryRecorder::operator()(std::size_t step, double t, const SpectralField& u) {
  sup_ = std::max(sup_, h_norm_sq(u));
  if (step % traj_.stride == 0 || step == steps_) {
    traj_.times.push_back(t);
    traj_.frames.push_back(u);
    traj_.running_sup_h_sq.push_back(sup_);
    traj_.running_int_v_sq.push_back(integral_);
  }
  if (step < steps_) integral_ += step_dissipation(u, weights_);
}

void simulate_snse(const SimConfig& config, NormalStream& rng, const StepObserver& observer) {
  config.validate();
  const std::size_t steps = config.steps();
  const StepWeights w(config.grid, config.dt);
  const double scale = std::max(1.0, std::sqrt(h_norm_sq(config.initial)));
  const double limit = config.blowup_factor * scale;
  const bool noisy = config.epsilon > 0.0;

  SpectralField u = config.initial;
  std::vector<double> dW;
  std::optional<SpectralField> f_slot;
  for (std::size_t m = 0; m <= steps; ++m) {
    const double t = static_cast<double>(m) * config.dt;
    if (m == steps) {
      observer(m, t, u, {});
      break;
    }
    if (noisy) {
      dW = sample_wiener_increment(config.noise, config.dt, rng);
    } else {
      dW.clear();
    }
    observer(m, t, u, dW);
    const SpectralField* f_t = forcing_ptr(config, t, f_slot);
    try {
      u = noisy ? step_snse(u, f_t, config.epsilon, dW, w, config.noise, t, config.nonlinear)
                : step_deterministic(u, f_t, w, config.nonlinear);
    } catch (const IntegrationError&) {
      throw IntegrationError("non-finite state", m + 1);
    }
    const double norm = std::sqrt(h_norm_sq(u));
    if (norm > limit) throw IntegrationError("blowup: |u| = " + std::to_string(norm) + " exceeds guard", m + 1);
  }
}

Trajectory solve_deterministic(const SimConfig& config) {
  SimConfig det = config;
  det.epsilon = 0.0;
  TrajectoryRecorder rec(det, {0, config.config_hash, "u0"});
  NormalStream none = NormalStream::zeros();
  simulate_snse(det, none, [&](std::size_t m, double t, const SpectralField& u, std::span<const double>) {
    rec(m, t, u);
  });
  return rec.take();
}

Trajectory solve_snse(const SimConfig& config, std::uint64_t seed) {
  TrajectoryRecorder rec(config, {seed, config.config_hash, "u_eps"});
  NormalStream rng(seed, 0);
  simulate_snse(config, rng, [&](std::size_t m, double t, const SpectralField& u, std::span<const double>) {
    rec(m, t, u);
  });
  return rec.take();
}

Trajectory solve_skeleton(const Control& h, const Trajectory& u0_traj, const SimConfig& config) {
  config.validate();
  require_companion(u0_traj, config, "solve_skeleton");
  const std::size_t steps = config.steps();
  if (h.steps() != steps || h.num_modes() != config.noise.num_modes()) {
    throw FieldError("solve_skeleton: control must live on the solver grid with J modes");
  }
  const StepWeights w(config.grid, config.dt);
  TrajectoryRecorder rec(config, {0, config.config_hash, "skeleton"});
  SpectralField x(config.grid);
  std::vector<double> coords(h.num_modes());
  const auto dirs = config.noise.directions();
  for (std::size_t m = 0; m <= steps; ++m) {
    const double t = static_cast<double>(m) * config.dt;
    rec(m, t, x);
    if (m == steps) break;
    const SpectralField& u0 = u0_traj.frames[m];
    const double mult = config.noise.multiplier(u0);
    const auto hm = h.at(m);
    for (std::size_t j = 0; j < coords.size(); ++j) coords[j] = mult * dirs[j].gain * hm[j];
    SpectralField rhs = config.noise.synthesize(coords);
    if (config.nonlinear) rhs = rhs - bilinear_B(x, u0) - bilinear_B(u0, x);
    x = exponential_update(x, rhs, w);
    require_finite(x, m + 1);
  }
  return rec.take();
}

double loglog_inverse(double eps) {
  if (!(eps > 0.0) || !(eps < std::exp(-std::numbers::e))) {
    throw ParameterError("epsilon " + std::to_string(eps) + " outside (0, e^{-e})");
  }
  return std::log(std::log(1.0 / eps));
}

Trajectory solve_tilde_z(const Control& h, const Trajectory* u_eps_traj, const Trajectory& u0_traj,
                         double eps, std::uint64_t seed, const SimConfig& config) {
  NormalStream rng(seed, 0);
  Trajectory out = solve_tilde_z(h, u_eps_traj, u0_traj, eps, rng, config);
  out.provenance.seed = seed;
  return out;
}

Trajectory solve_tilde_z(const Control& h, const Trajectory* u_eps_traj, const Trajectory& u0_traj,
                         double eps, NormalStream& rng, const SimConfig& config, const StepObserver& observer) {
  const double ll = loglog_inverse(eps);
  config.validate();
  require_companion(u0_traj, config, "solve_tilde_z");
  if (u_eps_traj != nullptr) require_companion(*u_eps_traj, config, "solve_tilde_z");
  const std::size_t steps = config.steps();
  if (h.steps() != steps || h.num_modes() != config.noise.num_modes()) {
    throw FieldError("solve_tilde_z: control must live on the solver grid with J modes");
  }
  const double shift = std::sqrt(2.0 * eps * ll);
  const double noise_scale = 1.0 / std::sqrt(2.0 * ll);
  const StepWeights w(config.grid, config.dt);
  const auto dirs = config.noise.directions();

  TrajectoryRecorder rec(config, {0, config.config_hash, "tilde_z"});
  SpectralField z(config.grid);
  std::vector<double> coords(h.num_modes());
  for (std::size_t m = 0; m <= steps; ++m) {
    const double t = static_cast<double>(m) * config.dt;
    if (m == steps) {
      rec(m, t, z);
      if (observer) observer(m, t, z, {});
      break;
    }
    const std::vector<double> dW = sample_wiener_increment(config.noise, config.dt, rng);
    rec(m, t, z);
    if (observer) observer(m, t, z, dW);
    const SpectralField& u0 = u0_traj.frames[m];
    const double mult = config.noise.multiplier(u0 + z * shift);
    const auto hm = h.at(m);
    for (std::size_t j = 0; j < coords.size(); ++j) coords[j] = mult * dirs[j].gain * hm[j];
    SpectralField rhs = config.noise.synthesize(coords);
    if (config.nonlinear) {
      const SpectralField ue = u_eps_traj != nullptr ? u_eps_traj->frames[m] : u0 + z * shift;
      rhs = rhs - bilinear_B(ue, z) - bilinear_B(z, u0);
    }
    ModeCoefficients c = exponential_coeffs(z, &rhs, w);
    add_noise(c, config.noise, mult, noise_scale, dW, w);
    z = SpectralField::unchecked(config.grid, std::move(c));
    require_finite(z, m + 1);
  }
  return rec.take();
}

void DeviationAccumulator::add(std::size_t step, const SpectralField& diff) {
  sup_ = std::max(sup_, h_norm_sq(diff));
  if (step < steps_) integral_ += step_dissipation(diff, *weights_);
}

double DeviationAccumulator::energy_norm() const { return std::sqrt(sup_ + integral_); }

}  // namespace snse
