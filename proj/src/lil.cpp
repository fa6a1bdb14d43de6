#include "snse/lil.hpp"

#include <algorithm>
#include <cmath>

#include "snse/errors.hpp"
#include "snse/parallel.hpp"

namespace snse {

std::vector<double> LilSchedule::eps_grid() const {
  std::vector<double> out;
  for (int j = j_min; j <= j_max; ++j) out.push_back(eps(j));
  return out;
}

void LilSchedule::validate(std::optional<double> eps0) const {
  if (!(base > 1.0)) throw ParameterError("LIL schedule: base c must exceed 1");
  if (j_min > j_max) throw ParameterError("LIL schedule: empty index range");
  if (!(eps(j_min) < std::exp(-std::numbers::e))) {
    throw ParameterError("LIL schedule: eps_{j_min} must be below e^{-e} so that loglog(1/eps) > 0");
  }
  if (!(eps(j_max) > 0.0)) throw ParameterError("LIL schedule: eps_{j_max} underflows");
  if (eps0 && !(j_min > std::log(1.0 / *eps0) / std::log(base))) {
    throw ParameterError("LIL schedule: j_min must exceed log(1/eps0)/log c");
  }
}

Trajectory z_process(const Trajectory& u_eps, const Trajectory& u0, double eps) {
  const double scale = 1.0 / std::sqrt(2.0 * eps * loglog_inverse(eps));
  if (!(u_eps.grid == u0.grid) || u_eps.size() != u0.size() || u_eps.stride != u0.stride) {
    throw FieldError("z_process: trajectories are not aligned");
  }
  Trajectory z(u_eps.grid);
  z.dt = u_eps.dt;
  z.stride = u_eps.stride;
  z.times = u_eps.times;
  z.provenance = u_eps.provenance;
  z.provenance.kind = "z";
  double sup = 0.0, integral = 0.0;
  std::optional<StepWeights> w;
  double w_len = -1.0;
  for (std::size_t r = 0; r < u_eps.size(); ++r) {
    z.frames.push_back((u_eps.frames[r] - u0.frames[r]) * scale);
    sup = std::max(sup, h_norm_sq(z.frames.back()));
    z.running_sup_h_sq.push_back(sup);
    z.running_int_v_sq.push_back(integral);
    if (r + 1 < u_eps.size()) {
      const double len = z.times[r + 1] - z.times[r];
      if (len != w_len) {
        w.emplace(z.grid, len);
        w_len = len;
      }
      integral += step_dissipation(z.frames.back(), *w);
    }
  }
  return z;
}

LimitSetProbe::LimitSetProbe(const Trajectory& u0_traj, const SimConfig& config, double tolerance)
    : u0_(&u0_traj), config_(config), tolerance_(tolerance) {
  if (!(tolerance >= 0.0)) throw ParameterError("limit set probe: tolerance must be >= 0");
}

std::size_t LimitSetProbe::add(const Control& h) {
  const double half = 0.5 * control_energy(h, config_.noise);
  if (half > 1.0 + 1e-12) {
    throw ParameterError("limit set probe: candidate has (1/2) energy " + std::to_string(half) + " > 1");
  }
  controls_.push_back(h);
  images_.push_back(solve_skeleton(h, *u0_, config_));
  return images_.size() - 1;
}

LimitSetProbe LimitSetProbe::sinusoid_family(const Trajectory& u0_traj, const SimConfig& config, std::size_t modes,
                                             std::size_t harmonics, double tolerance) {
  LimitSetProbe probe(u0_traj, config, tolerance);
  const std::size_t M = config.steps(), J = config.noise.num_modes();
  probe.add(Control(config.horizon, M, J));
  for (std::size_t j = 0; j < std::min(modes, J); ++j) {
    for (std::size_t q = 1; q <= harmonics; ++q) {
      Control h(config.horizon, M, J);
      for (std::size_t m = 0; m < M; ++m) {
        const double t = (static_cast<double>(m) + 0.5) * config.dt;
        h.at(m)[j] = std::sin(std::numbers::pi * static_cast<double>(q) * t / config.horizon);
      }
      const double e = control_energy(h, config.noise);
      if (!(e > 0.0)) continue;
      // half energy exactly 1, nudged inside by rounding
      h = h * (std::sqrt(2.0 / e) * (1.0 - 1e-15));
      probe.add(h);
      probe.add(h * -1.0);
    }
  }
  return probe;
}

LimitDistance limit_set_distance(const Trajectory& z, const LimitSetProbe& probe) {
  if (probe.size() == 0) throw ParameterError("limit_set_distance: empty probe");
  LimitDistance best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double d = energy_distance(z, probe.image(i));
    if (d < best.distance) best = {d, i};
  }
  return best;
}

ClusterReport strassen_cluster_study(const LilSchedule& schedule, const LimitSetProbe& probe,
                                     const SimConfig& config, const McOptions& options) {
  schedule.validate();
  if (probe.size() == 0) throw ParameterError("strassen_cluster_study: empty probe");
  const Trajectory u0 = solve_deterministic(config);
  ClusterReport report;
  for (int j = schedule.j_min; j <= schedule.j_max; ++j) {
    report.j.push_back(j);
    report.eps.push_back(schedule.eps(j));
  }
  const std::size_t nj = report.j.size(), nc = probe.size();
  struct Replicate {
    std::vector<double> distance;
    std::vector<std::size_t> nearest;
    std::vector<std::size_t> hits;
  };
  const auto reps = parallel_map(options.samples, options.workers, [&](std::size_t rep) {
    Replicate out{std::vector<double>(nj), std::vector<std::size_t>(nj), std::vector<std::size_t>(nc, 0)};
    for (std::size_t k = 0; k < nj; ++k) {
      SimConfig c = config;
      c.epsilon = report.eps[k];
      const Trajectory z = z_process(sample_snse(c, options.seed, rep), u0, report.eps[k]);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nc; ++i) {
        const double d = energy_distance(z, probe.image(i));
        if (d <= probe.tolerance()) ++out.hits[i];
        if (d < best) {
          best = d;
          out.nearest[k] = i;
        }
      }
      out.distance[k] = best;
    }
    return out;
  });
  report.hit_fraction.assign(nc, 0.0);
  for (const auto& r : reps) {
    report.distance.push_back(r.distance);
    report.nearest.push_back(r.nearest);
    report.running_max.push_back(*std::max_element(r.distance.begin(), r.distance.end()));
    for (std::size_t i = 0; i < nc; ++i) report.hit_fraction[i] += static_cast<double>(r.hits[i]);
  }
  const double total = static_cast<double>(reps.size() * nj);
  for (auto& f : report.hit_fraction) f /= total;
  return report;
}

RatioReport classical_ratio_study(const LilSchedule& schedule, const SimConfig& config, const McOptions& options) {
  schedule.validate();
  SimConfig base = config;
  base.record_stride = 1;
  const Trajectory u0 = solve_deterministic(base);
  RatioReport report;
  for (int j = schedule.j_min; j <= schedule.j_max; ++j) {
    report.j.push_back(j);
    report.eps.push_back(schedule.eps(j));
  }
  const std::size_t nj = report.j.size();
  // deviation_norms with the same seed reuses stream (seed, replicate) for every eps_j
  std::vector<std::vector<double>> by_j;
  for (std::size_t k = 0; k < nj; ++k) {
    const double eps = report.eps[k];
    auto norms = deviation_norms(eps, base, u0, options);
    const double scale = 1.0 / std::sqrt(2.0 * eps * loglog_inverse(eps));
    for (auto& n : norms) n *= scale;
    by_j.push_back(std::move(norms));
  }
  for (std::size_t rep = 0; rep < options.samples; ++rep) {
    std::vector<double> row(nj);
    for (std::size_t k = 0; k < nj; ++k) row[k] = by_j[k][rep];
    report.running_max.push_back(*std::max_element(row.begin(), row.end()));
    report.running_min.push_back(*std::min_element(row.begin(), row.end()));
    report.ratio.push_back(std::move(row));
  }
  std::vector<double> js;
  for (std::size_t k = 0; k < nj; ++k) {
    report.mean.push_back(moments(by_j[k]).mean);
    report.quantiles.push_back({quantile(by_j[k], 0.1), quantile(by_j[k], 0.5), quantile(by_j[k], 0.9)});
    js.push_back(static_cast<double>(report.j[k]));
  }
  if (nj >= 2) report.trend = linear_fit(js, report.mean);
  return report;
}

}  // namespace snse
