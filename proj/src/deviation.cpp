#include "snse/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lbfgs.hpp"
#include "skeleton_operator.hpp"
#include "snse/errors.hpp"
#include "snse/parallel.hpp"

namespace snse {

namespace {

using detail::scale_modes;
using detail::SkeletonOperator;

// Weights for each distinct recording interval, keyed by its length.
class IntervalWeights {
 public:
  explicit IntervalWeights(const SpectralGrid& grid) : grid_(grid) {}

  const StepWeights& operator()(double length) {
    auto it = cache_.find(length);
    if (it == cache_.end()) it = cache_.emplace(length, StepWeights(grid_, length)).first;
    return it->second;
  }

 private:
  SpectralGrid grid_;
  std::map<double, StepWeights> cache_;
};

void require_same_recording(const Trajectory& a, const Trajectory& b, const char* what) {
  if (!(a.grid == b.grid) || a.size() != b.size() || a.stride != b.stride || a.dt != b.dt) {
    throw FieldError(std::string(what) + ": trajectories are not on the same recording grid");
  }
}

SimConfig every_step(const SimConfig& config) {
  SimConfig c = config;
  c.record_stride = 1;
  return c;
}

std::size_t count_true(const std::vector<char>& flags) {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), char{1}));
}

}  // namespace

EpsilonThresholds epsilon_thresholds(const ConstantsLedger& ledger, double p) {
  for (int i = 1; i <= 9; ++i) {
    if (!(ledger.k(i) > 0.0)) throw ParameterError("constant K" + std::to_string(i) + " must be positive");
  }
  if (!(p >= 1.0)) throw ParameterError("epsilon_thresholds: p must be >= 1");
  const double k1 = ledger.k(1), k2 = ledger.k(2), k9 = ledger.k(9);
  const double common = std::min({1.0 / (2.0 * k1 * k1), 1.0 / (4.0 * k1), 1.0 / (2.0 * k2)});
  EpsilonThresholds out;
  out.eps0 = std::min(common, 1.0 / (78.0 * k9));
  out.eps1 = std::min(common, 1.0 / (36.0 * k9));
  out.eps2 = std::min(out.eps1, 1.0 / (k9 * (36.0 * p + 2.0)));
  return out;
}

double energy_norm_sq(std::span<const SpectralField> frames, std::span<const double> times) {
  if (frames.empty()) return 0.0;
  if (times.size() != frames.size()) throw FieldError("energy_norm: frames and times differ in length");
  IntervalWeights weights(frames.front().grid());
  double sup = 0.0, integral = 0.0;
  for (std::size_t r = 0; r < frames.size(); ++r) {
    sup = std::max(sup, h_norm_sq(frames[r]));
    if (r + 1 < frames.size()) integral += step_dissipation(frames[r], weights(times[r + 1] - times[r]));
  }
  return sup + integral;
}

double energy_norm(const Trajectory& traj) { return std::sqrt(energy_norm_sq(traj.frames, traj.times)); }

double energy_distance(const Trajectory& a, const Trajectory& b) {
  require_same_recording(a, b, "energy_distance");
  std::vector<SpectralField> diff;
  diff.reserve(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) diff.push_back(a.frames[r] - b.frames[r]);
  return std::sqrt(energy_norm_sq(diff, a.times));
}

Trajectory sample_snse(const SimConfig& config, std::uint64_t seed, std::size_t path) {
  TrajectoryRecorder rec(config, {seed, config.config_hash, "u_eps"});
  NormalStream rng(seed, path);
  simulate_snse(config, rng, [&](std::size_t m, double t, const SpectralField& u, std::span<const double>) {
    rec(m, t, u);
  });
  return rec.take();
}

double ProbabilityEstimate::log_estimate() const {
  return hits == 0 ? std::log(upper_bound) : std::log(estimate);
}

ProbabilityEstimate make_estimate(std::size_t hits, std::size_t samples) {
  ProbabilityEstimate e;
  e.hits = hits;
  e.samples = samples;
  e.estimate = samples > 0 ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0;
  e.wilson = wilson_interval(hits, samples);
  e.upper_bound = hits == 0 ? zero_hit_upper_bound(samples) : e.wilson.hi;
  return e;
}

ProbabilityEstimate mc_probability(const TrajectoryEvent& event, double eps, const SimConfig& config,
                                   const McOptions& options) {
  if (options.samples < 1) throw ParameterError("mc_probability: need at least one sample");
  SimConfig c = config;
  c.epsilon = eps;
  const auto flags = parallel_map(options.samples, options.workers, [&](std::size_t i) -> char {
    return event(sample_snse(c, options.seed, i)) ? 1 : 0;
  });
  return make_estimate(count_true(flags), options.samples);
}

std::vector<double> deviation_norms(double eps, const SimConfig& config, const Trajectory& u0_traj,
                                    const McOptions& options) {
  SimConfig c = every_step(config);
  c.epsilon = eps;
  const std::size_t steps = c.steps();
  if (u0_traj.stride != 1 || u0_traj.size() != steps + 1) {
    throw FieldError("deviation_norms: u0 must be recorded at every solver step");
  }
  const StepWeights w(c.grid, c.dt);
  return parallel_map(options.samples, options.workers, [&](std::size_t i) {
    DeviationAccumulator acc(w, steps);
    NormalStream rng(options.seed, i);
    simulate_snse(c, rng, [&](std::size_t m, double, const SpectralField& u, std::span<const double>) {
      acc.add(m, u - u0_traj.frames[m]);
    });
    return acc.energy_norm();
  });
}

// ---------------------------------------------------------------- rate function

RateProblem::RateProblem(const Trajectory& target, const Trajectory& u0_traj, const SimConfig& config,
                         double penalty, double sharpness)
    : op_(std::make_shared<SkeletonOperator>(u0_traj, config)),
      target_(&target),
      record_weights_(config.grid, config.dt * static_cast<double>(target.stride)),
      steps_(config.steps()),
      num_modes_(config.noise.num_modes()),
      penalty_(penalty) {
  if (!(target.grid == config.grid) || std::abs(target.dt - config.dt) > 1e-15 * config.dt) {
    throw FieldError("rate_function: target must live on the solver grid");
  }
  for (std::size_t m = 0; m <= steps_; m += target.stride) record_steps_.push_back(m);
  if (record_steps_.back() != steps_) record_steps_.push_back(steps_);
  if (record_steps_.size() != target.size()) throw FieldError("rate_function: target recording does not match T/dt");
  if (steps_ % target.stride != 0) throw FieldError("rate_function: target stride must divide the step count");
  double vmax = 0.0;
  for (const auto& f : target.frames) vmax = std::max(vmax, h_norm_sq(f));
  beta_ = sharpness / std::max(vmax, 1e-300);
}

double RateProblem::objective(const Control& h, Control* gradient) const {
  const auto x = op_->forward(h);
  const auto lam = op_->config().noise.eigenvalues();
  const double dt = op_->config().dt;

  double energy = 0.0;
  for (std::size_t m = 0; m < steps_; ++m) {
    const auto hm = h.at(m);
    for (std::size_t j = 0; j < num_modes_; ++j) energy += hm[j] * hm[j] / lam[j];
  }
  energy *= dt;

  const std::size_t R = record_steps_.size();
  std::vector<SpectralField> diff;
  std::vector<double> q(R);
  diff.reserve(R);
  double integral = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    diff.push_back(x[record_steps_[r]] - target_->frames[r]);
    q[r] = h_norm_sq(diff[r]);
    if (r + 1 < R) integral += step_dissipation(diff[r], record_weights_);
  }
  // log-mean-exp soft-max of q
  const double qmax = *std::max_element(q.begin(), q.end());
  std::vector<double> p(R);
  double z = 0.0;
  for (std::size_t r = 0; r < R; ++r) z += p[r] = std::exp(beta_ * (q[r] - qmax));
  const double softmax = qmax + std::log(z / static_cast<double>(R)) / beta_;
  const double value = 0.5 * energy + 0.5 * penalty_ * (softmax + integral);
  if (gradient == nullptr) return value;

  // H-gradient of the penalty at each record step
  std::vector<std::optional<SpectralField>> seeds(steps_ + 1);
  for (std::size_t r = 0; r < R; ++r) {
    SpectralField g = diff[r] * (penalty_ * p[r] / z);
    if (r + 1 < R) g = g + scale_modes(diff[r], record_weights_.energy) * penalty_;
    seeds[record_steps_[r]] = std::move(g);
  }
  Control grad = op_->adjoint([&](std::size_t m) { return seeds[m] ? &*seeds[m] : nullptr; });
  for (std::size_t m = 0; m < steps_; ++m) {
    auto gm = grad.at(m);
    const auto hm = h.at(m);
    for (std::size_t j = 0; j < num_modes_; ++j) gm[j] += hm[j] * dt / lam[j];
  }
  *gradient = std::move(grad);
  return value;
}

double RateProblem::residual(const Control& h) const {
  const auto x = op_->forward(h);
  std::vector<SpectralField> diff;
  diff.reserve(record_steps_.size());
  for (std::size_t r = 0; r < record_steps_.size(); ++r) diff.push_back(x[record_steps_[r]] - target_->frames[r]);
  return std::sqrt(energy_norm_sq(diff, target_->times));
}

RateResult rate_function(const Trajectory& target, const Trajectory& u0_traj, const SimConfig& config,
                         const RateOptions& options) {
  RateProblem problem(target, u0_traj, config, options.penalty_start, options.sharpness);
  const std::size_t M = problem.steps(), J = problem.num_modes();
  const auto lam = config.noise.eigenvalues();
  // optimize in y with h = y sqrt(lambda / dt), so that energy(h) = |y|^2
  std::vector<double> scale(J);
  for (std::size_t j = 0; j < J; ++j) scale[j] = std::sqrt(lam[j] / config.dt);
  auto to_control = [&](std::span<const double> y) {
    Control h(config.horizon, M, J);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t j = 0; j < J; ++j) h.at(m)[j] = y[m * J + j] * scale[j];
    }
    return h;
  };

  RateResult result;
  result.control = Control(config.horizon, M, J);
  result.residual = problem.residual(result.control);
  if (result.residual <= options.feasibility_tol) {
    result.feasible = true;
    result.value = 0.0;
    result.status = "zero control attains the target";
    return result;
  }

  std::vector<double> y(M * J, 0.0);
  Control grad(config.horizon, M, J);
  detail::LbfgsOptions lo;
  lo.max_iterations = options.max_iterations;
  lo.memory = options.memory;
  for (double mu = options.penalty_start; mu <= options.penalty_max * (1 + 1e-12); mu *= options.penalty_growth) {
    problem.set_penalty(mu);
    const auto run = detail::lbfgs_minimize(
        [&](std::span<const double> yy, std::span<double> g) {
          const double v = problem.objective(to_control(yy), &grad);
          for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t j = 0; j < J; ++j) g[m * J + j] = grad.at(m)[j] * scale[j];
          }
          return v;
        },
        y, lo);
    result.iterations += run.iterations;
    result.evaluations += run.evaluations;
    result.gradient_norm = run.gradient_norm;
    result.penalty = mu;
    result.control = to_control(y);
    result.half_energy = 0.5 * std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    result.residual = problem.residual(result.control);
    result.status = run.status;
    if (result.residual <= options.feasibility_tol) {
      result.feasible = true;
      result.value = result.half_energy;
      return result;
    }
    if (result.half_energy > options.energy_cap) {
      result.status = "energy cap exceeded";
      return result;
    }
  }
  result.status = "penalty limit reached with residual above tolerance";
  return result;
}

ResponseBound skeleton_response_bound(const Trajectory& u0_traj, const SimConfig& config, std::size_t probe_times,
                                      std::size_t iterations) {
  const SkeletonOperator op(u0_traj, every_step(config));
  const std::size_t M = op.steps(), J = op.num_modes();
  if (M == 0 || probe_times == 0) throw ParameterError("skeleton_response_bound: empty horizon or probe set");
  const auto lam = config.noise.eigenvalues();
  std::vector<double> scale(J);
  for (std::size_t j = 0; j < J; ++j) scale[j] = std::sqrt(lam[j] / config.dt);
  const StepWeights& w = op.weights();

  auto to_control = [&](const std::vector<double>& y) {
    Control h(config.horizon, M, J);
    for (std::size_t i = 0; i < y.size(); ++i) h.values()[i] = y[i] * scale[i % J];
    return h;
  };
  // Rayleigh quotient and gradient of (1/2)(|X_t|^2 + int ||X||^2) in y
  auto apply = [&](const std::vector<double>& y, std::size_t t_star, std::vector<double>& out) {
    const auto x = op.forward(to_control(y));
    double form = h_norm_sq(x[t_star]);
    std::vector<std::optional<SpectralField>> seeds(M + 1);
    for (std::size_t m = 0; m < M; ++m) {
      form += step_dissipation(x[m], w);
      seeds[m] = scale_modes(x[m], w.energy);
    }
    seeds[t_star] = seeds[t_star] ? *seeds[t_star] + x[t_star] : x[t_star];
    const Control g = op.adjoint([&](std::size_t m) { return seeds[m] ? &*seeds[m] : nullptr; });
    out.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = g.values()[i] * scale[i % J];
    return form;
  };

  std::vector<double> y(M * J, 1.0), next;
  auto power = [&](std::size_t t_star) {
    double value = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
      const double norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
      for (auto& v : y) v /= norm;
      const double q = apply(y, t_star, next);
      y.swap(next);
      if (std::abs(q - value) <= 1e-12 * q) {
        value = q;
        break;
      }
      value = q;
    }
    return value;
  };

  ResponseBound best;
  std::size_t best_step = M;
  auto consider = [&](std::size_t t_star) {
    const double v = power(t_star);
    if (v > best.lambda) {
      best.lambda = v;
      best_step = t_star;
      best.direction = to_control(y);
    }
  };
  for (std::size_t k = 1; k <= probe_times; ++k) consider(std::max<std::size_t>(1, k * M / probe_times));
  const std::size_t coarse = std::max<std::size_t>(1, M / probe_times);
  const std::size_t lo = best_step > coarse ? best_step - coarse : 1;
  const std::size_t hi = std::min(M, best_step + coarse);
  const std::size_t fine = std::max<std::size_t>(1, (hi - lo) / probe_times);
  for (std::size_t t = lo; t <= hi; t += fine) consider(t);

  // normalize the direction to unit energy
  const double e = control_energy(best.direction, lam);
  if (e > 0.0) best.direction = best.direction * (1.0 / std::sqrt(e));
  best.peak_time = static_cast<double>(best_step) * config.dt;
  return best;
}

// ---------------------------------------------------------------- MDP probe

double SpeedFunction::operator()(double eps) const {
  if (kind == Kind::loglog) return 1.0 / std::sqrt(2.0 * loglog_inverse(eps));
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("speed function: eps outside (0, 1)");
  return std::pow(eps, gamma);
}

void SpeedFunction::validate() const {
  if (kind == Kind::power && !(gamma > 0.0 && gamma < 0.5)) {
    throw ParameterError("power speed a = eps^gamma needs 0 < gamma < 1/2 so that a -> 0 and a/sqrt(eps) -> inf");
  }
}

ScalingReport mdp_scaling_probe(double r, std::span<const double> eps_grid, const SpeedFunction& a,
                                const SimConfig& config, const McOptions& options) {
  a.validate();
  if (r < 0.0) throw ParameterError("mdp_scaling_probe: radius must be >= 0");
  if (eps_grid.empty()) throw ParameterError("mdp_scaling_probe: empty eps grid");
  const SimConfig c = every_step(config);
  const Trajectory u0 = solve_deterministic(c);

  ScalingReport report;
  report.radius = r;
  report.lambda = skeleton_response_bound(u0, c).lambda;
  report.rate = report.lambda > 0.0 ? r * r / (2.0 * report.lambda) : std::numeric_limits<double>::infinity();

  for (double eps : eps_grid) {
    ScalingRow row;
    row.eps = eps;
    row.a = a(eps);
    row.threshold = r * std::sqrt(eps) / row.a;
    const auto norms = deviation_norms(eps, c, u0, options);
    const auto hits = static_cast<std::size_t>(
        std::count_if(norms.begin(), norms.end(), [&](double n) { return n >= row.threshold; }));
    row.probability = make_estimate(hits, norms.size());
    row.scaled_log = row.a * row.a * row.probability.log_estimate();
    row.gap = row.scaled_log + report.rate;
    report.rows.push_back(row);
  }

  std::vector<ScalingRow> ordered = report.rows;
  std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) { return x.eps > y.eps; });
  report.gap_shrinks = true;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (std::abs(ordered[i].gap) > std::abs(ordered[i - 1].gap)) report.gap_shrinks = false;
  }
  if (ordered.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& row : ordered) {
      x.push_back(row.a * row.a);
      y.push_back(std::abs(row.gap));
    }
    report.trend = linear_fit(x, y);
  }
  return report;
}

// ---------------------------------------------------------------- FW probe

void FWConfig::validate(double eps0) const {
  if (!(rho > 0.0) || !(eta > 0.0) || !(R > 0.0) || beta < 0.0) {
    throw ParameterError("FW config: rho, eta, R must be positive and beta >= 0");
  }
  if (depth < 0) throw ParameterError("FW config: dyadic depth must be >= 0");
  if (samples < 1) throw ParameterError("FW config: need at least one sample");
  if (eps_grid.empty()) throw ParameterError("FW config: empty eps grid");
  for (double e : eps_grid) {
    if (!(e > 0.0 && e < eps0)) throw ParameterError("FW config: eps " + std::to_string(e) + " outside (0, eps0)");
  }
}

FWReport fw_conditional_probe(const Control& h, const FWConfig& fw, const SimConfig& config,
                              const McOptions& options) {
  fw.validate();
  const SimConfig base = every_step(config);
  const std::size_t M = base.steps(), J = base.noise.num_modes();
  if (h.steps() != M || h.num_modes() != J) throw FieldError("fw_conditional_probe: control shape");
  if (fw.beta > 0.0 && (std::size_t{1} << fw.depth) > M) {
    throw ParameterError("fw_conditional_probe: dyadic depth too fine for the step count");
  }
  const Trajectory u0 = solve_deterministic(base);
  const Trajectory xh = solve_skeleton(h, u0, base);
  const auto lam = base.noise.eigenvalues();
  const StepWeights w(base.grid, base.dt);
  const std::size_t cells = std::size_t{1} << fw.depth;

  // H(t_m) = int_0^{t_m} h, in noise coordinates
  std::vector<double> primitive((M + 1) * J, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j = 0; j < J; ++j) primitive[(m + 1) * J + j] = primitive[m * J + j] + h.at(m)[j] * base.dt;
  }

  FWReport report;
  for (double eps : fw.eps_grid) {
    SimConfig c = base;
    c.epsilon = eps;
    const double ll = loglog_inverse(eps);
    const double zscale = 1.0 / std::sqrt(2.0 * eps * ll);
    const double wscale = 1.0 / std::sqrt(2.0 * ll);

    struct Outcome {
      char deviation = 0, close = 0, increment = 1;
    };
    const auto outcomes = parallel_map(fw.samples, options.workers, [&](std::size_t i) {
      DeviationAccumulator dev(w, M), inc(w, M);
      std::vector<double> W(J, 0.0);
      double close_sup = 0.0;
      std::optional<SpectralField> ref;
      NormalStream rng(options.seed, i);
      simulate_snse(c, rng, [&](std::size_t m, double, const SpectralField& u, std::span<const double> dW) {
        const SpectralField z = (u - u0.frames[m]) * zscale;
        dev.add(m, z - xh.frames[m]);
        double dist = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          const double d = W[j] * wscale - primitive[m * J + j];
          dist += d * d / lam[j];
        }
        close_sup = std::max(close_sup, dist);
        for (std::size_t j = 0; j < dW.size(); ++j) W[j] += dW[j];
        if (fw.beta > 0.0) {
          const std::size_t cell = std::min(m * cells / M, cells - 1);
          const std::size_t ref_step = (cell * M + cells - 1) / cells;
          if (m == ref_step) ref = z;
          inc.add(m, z - *ref);
        }
      });
      Outcome o;
      o.deviation = dev.energy_norm() > fw.rho;
      o.close = close_sup < fw.eta * fw.eta;
      if (fw.beta > 0.0) o.increment = inc.energy_norm() <= fw.beta;
      return o;
    });

    std::size_t n_dev = 0, n_close = 0, n_joint = 0;
    for (const auto& o : outcomes) {
      n_dev += o.deviation;
      n_close += o.close;
      n_joint += o.deviation && o.close && o.increment;
    }
    FWRow row;
    row.eps = eps;
    row.loglog = ll;
    row.joint = make_estimate(n_joint, fw.samples);
    row.closeness = make_estimate(n_close, fw.samples);
    row.deviation = make_estimate(n_dev, fw.samples);
    row.conditional = make_estimate(n_joint, n_close);
    row.bound = std::exp(-2.0 * fw.R * ll);
    row.below_bound = n_close > 0 && row.conditional.estimate < row.bound;
    report.rows.push_back(row);
  }
  const auto smallest = std::min_element(report.rows.begin(), report.rows.end(),
                                         [](const auto& x, const auto& y) { return x.eps < y.eps; });
  report.below_at_smallest = smallest->below_bound;
  return report;
}

double dyadic_increment_stat(const Trajectory& traj, int depth) {
  if (depth < 0 || depth > 30) throw ParameterError("dyadic_increment_stat: depth out of range");
  if (traj.size() < 2) throw ParameterError("dyadic_increment_stat: need at least one recorded step");
  const std::size_t R = traj.size() - 1;
  const std::size_t cells = std::size_t{1} << depth;
  if (cells > R) throw ParameterError("dyadic_increment_stat: 2^n exceeds the recorded steps");
  std::vector<SpectralField> diff;
  diff.reserve(traj.size());
  for (std::size_t r = 0; r <= R; ++r) {
    const std::size_t cell = std::min(r * cells / R, cells - 1);
    const std::size_t ref = (cell * R + cells - 1) / cells;
    diff.push_back(traj.frames[r] - traj.frames[ref]);
  }
  return std::sqrt(energy_norm_sq(diff, traj.times));
}

// ---------------------------------------------------------------- moment bounds

namespace {

double stokes_sq(const SpectralField& u) {
  const auto& g = u.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double k2 = g.wavenumber(i).norm_sq();
    s += k2 * k2 * (std::norm(u.c1()[i]) + std::norm(u.c2()[i]));
  }
  return SpectralGrid::kArea * s;
}

// sup_t a(t)^p + int a(t)^{p-1} b(t) dt, accumulated step by step.
struct PowerFunctional {
  double p = 1.0;
  double sup = 0.0, integral = 0.0;
  void add(double a, double weighted_b, bool interior) {
    sup = std::max(sup, std::pow(a, p));
    if (interior) integral += std::pow(a, p - 1.0) * weighted_b;
  }
  double value() const { return sup + integral; }
};

}  // namespace

MomentReport moment_bound_suite(const MomentOptions& mo, const SimConfig& config, const McOptions& options) {
  if (mo.eps_grid.empty()) throw ParameterError("moment_bound_suite: empty eps grid");
  for (double p : mo.p_list) {
    if (!(p >= 1.0)) throw ParameterError("moment_bound_suite: p must be >= 1");
  }
  for (double eps : mo.eps_grid) {
    if (!(eps > 0.0 && eps < std::exp(-std::numbers::e))) {
      throw ParameterError("moment_bound_suite: eps outside (0, e^{-e})");
    }
    for (double p : mo.p_list) {
      if (p >= 2.0 && !(eps < 2.0 / (1.0 + 2.0 * p))) {
        throw ParameterError("moment_bound_suite: eps must be below 2/(1+2p) for the 2p-moment bound");
      }
    }
    if (mo.ledger != nullptr) {
      const double pmax = *std::max_element(mo.p_list.begin(), mo.p_list.end());
      const auto th = epsilon_thresholds(*mo.ledger, pmax);
      if (!(eps < th.eps0)) throw ParameterError("moment_bound_suite: eps above eps0 = " + std::to_string(th.eps0));
      if (!(eps < th.eps2)) throw ParameterError("moment_bound_suite: eps above eps2 = " + std::to_string(th.eps2));
    }
  }

  const SimConfig base = every_step(config);
  const std::size_t M = base.steps();
  const StepWeights w(base.grid, base.dt);
  const Trajectory u0 = solve_deterministic(base);
  MomentReport report;
  {
    const double sup = u0.running_sup_h_sq.back(), integral = u0.running_int_v_sq.back();
    report.k6 = sup + integral;
    report.k7 = sup * integral;
    for (std::size_t m = 0; m < M; ++m) report.l4_u0 += std::pow(norms(u0.frames[m]).l4_norm, 4) * base.dt;
    NormalStream rng(options.seed, std::uint64_t{1} << 40);
    const std::size_t J = base.noise.num_modes();
    for (std::size_t k = 0; k < mo.skeleton_probes; ++k) {
      Control h(base.horizon, M, J);
      for (auto& v : h.values()) v = rng();
      const double e = control_energy(h, base.noise);
      if (e > 0.0) h = h * std::sqrt(mo.skeleton_level / e);
      const Trajectory x = solve_skeleton(h, u0, base);
      report.skeleton = std::max(report.skeleton, x.running_sup_h_sq.back() + x.running_int_v_sq.back());
    }
  }

  std::vector<double> high_p;
  for (double p : mo.p_list) {
    if (p >= 2.0) high_p.push_back(p);
  }
  // quantity -> per-eps means
  std::map<std::pair<std::string, double>, std::vector<Moments>> table;
  std::vector<std::pair<std::string, double>> order;
  auto record = [&](const std::string& name, double p, const std::vector<double>& values) {
    const auto key = std::make_pair(name, p);
    if (!table.count(key)) order.push_back(key);
    table[key].push_back(moments(values));
  };

  for (double eps : mo.eps_grid) {
    SimConfig c = base;
    c.epsilon = eps;
    const std::size_t np = high_p.size(), nz = mo.p_list.size();
    // energy, quartic, deviation, then moment_2p and curl_2p per high p
    const auto u_stats = parallel_map(options.samples, options.workers, [&](std::size_t i) {
      PowerFunctional energy{1.0}, quartic{2.0}, deviation{1.0};
      std::vector<PowerFunctional> moment(np), curl(np);
      for (std::size_t k = 0; k < np; ++k) moment[k].p = curl[k].p = high_p[k];
      NormalStream rng(options.seed, i);
      simulate_snse(c, rng, [&](std::size_t m, double, const SpectralField& u, std::span<const double>) {
        const bool interior = m < M;
        const double h2 = h_norm_sq(u);
        const double v2 = interior ? step_dissipation(u, w) : 0.0;
        energy.add(h2, v2, interior);
        quartic.add(h2, v2, interior);
        const SpectralField d = u - u0.frames[m];
        deviation.add(h_norm_sq(d), interior ? step_dissipation(d, w) : 0.0, interior);
        if (np > 0) {
          const double vn = v_norm_sq(u);
          const double a2 = interior ? eps * stokes_sq(u) * c.dt : 0.0;
          for (std::size_t k = 0; k < np; ++k) {
            moment[k].add(h2, v2, interior);
            curl[k].sup = std::max(curl[k].sup, std::pow(vn, high_p[k]));
            curl[k].integral += a2;
          }
        }
      });
      std::vector<double> out{energy.value(), quartic.value(), deviation.value()};
      for (std::size_t k = 0; k < np; ++k) out.push_back(moment[k].value());
      for (std::size_t k = 0; k < np; ++k) out.push_back(curl[k].value());
      return out;
    });
    const Control zero(base.horizon, M, base.noise.num_modes());
    const auto z_stats = parallel_map(options.samples, options.workers, [&](std::size_t i) {
      PowerFunctional second{1.0};
      std::vector<PowerFunctional> zp(nz);
      for (std::size_t k = 0; k < nz; ++k) zp[k].p = mo.p_list[k];
      NormalStream rng(options.seed, i);
      solve_tilde_z(zero, nullptr, u0, eps, rng, c,
                    [&](std::size_t m, double, const SpectralField& z, std::span<const double>) {
                      const bool interior = m < M;
                      const double h2 = h_norm_sq(z);
                      const double v2 = interior ? step_dissipation(z, w) : 0.0;
                      second.add(h2, v2, interior);
                      for (auto& f : zp) f.add(h2, v2, interior);
                    });
      std::vector<double> out{second.value()};
      for (const auto& f : zp) out.push_back(f.value());
      return out;
    });

    auto column = [](const std::vector<std::vector<double>>& rows, std::size_t k) {
      std::vector<double> col;
      col.reserve(rows.size());
      for (const auto& r : rows) col.push_back(r[k]);
      return col;
    };
    record("energy", 1.0, column(u_stats, 0));
    record("quartic", 2.0, column(u_stats, 1));
    record("deviation", 1.0, column(u_stats, 2));
    for (std::size_t k = 0; k < np; ++k) record("moment_2p", high_p[k], column(u_stats, 3 + k));
    for (std::size_t k = 0; k < np; ++k) record("curl_2p", high_p[k], column(u_stats, 3 + np + k));
    record("tilde_z", 1.0, column(z_stats, 0));
    for (std::size_t k = 0; k < nz; ++k) record("tilde_z_2p", mo.p_list[k], column(z_stats, 1 + k));
  }

  const std::map<std::string, double> stated{{"energy", 1.0},    {"quartic", 1.0},   {"deviation", 2.0},
                                             {"moment_2p", 0.0}, {"curl_2p", 1.0},   {"tilde_z", 0.0},
                                             {"tilde_z_2p", 0.0}};
  for (const auto& key : order) {
    const auto& values = table[key];
    std::vector<double> means;
    for (std::size_t e = 0; e < values.size(); ++e) {
      report.rows.push_back({key.first, key.second, mo.eps_grid[e], values[e]});
      means.push_back(values[e].mean);
    }
    MomentFit fit;
    fit.quantity = key.first;
    fit.p = key.second;
    fit.stated_power = stated.at(key.first);
    const bool positive = std::all_of(means.begin(), means.end(), [](double v) { return v > 0.0; });
    if (positive && means.size() >= 2) {
      const auto lf = loglog_fit(mo.eps_grid, means);
      fit.fitted_exponent = lf.slope;
      fit.exponent_se = lf.slope_se;
    } else {
      fit.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t e = 0; e < means.size(); ++e) {
      fit.implied_constant = std::max(fit.implied_constant, means[e] / std::pow(mo.eps_grid[e], fit.stated_power));
    }
    report.fits.push_back(fit);
  }
  return report;
}

}  // namespace snse
