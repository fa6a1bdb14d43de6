#include <algorithm>
#include <cmath>
#include <sstream>

#include "snse/errors.hpp"
#include "snse/harness.hpp"

namespace snse::harness {
namespace {

std::string mode_name(Wavenumber k) {
  return "(" + std::to_string(k.k1) + ", " + std::to_string(k.k2) + ")";
}

SpectralField random_field(const SpectralGrid& grid, NormalStream& rng) {
  ModeCoefficients c(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    if (!(k.k1 > 0 || (k.k1 == 0 && k.k2 > 0))) continue;
    const double a = 1.0 / (1.0 + k.norm_sq());
    c.c1[i] = a * Complex(rng(), rng());
    c.c2[i] = a * Complex(rng(), rng());
    c.c1[grid.mirror(i)] = std::conj(c.c1[i]);
    c.c2[grid.mirror(i)] = std::conj(c.c2[i]);
  }
  const SpectralField u = project_leray(grid, c);
  return u * (1.0 / std::sqrt(h_norm_sq(u)));
}

VerifyItem antisymmetry_item(const SpectralGrid& grid, std::uint64_t seed, int triples) {
  VerifyItem item{"antisymmetry", false, 0.0, 1e-10, ""};
  NormalStream rng(seed, 11);
  for (int i = 0; i < triples; ++i) {
    const auto u = random_field(grid, rng), v = random_field(grid, rng);
    const auto nu = norms(u), nv = norms(v);
    // relative to the Holder bound |u|_L4 ||v|| |v|_L4
    item.value = std::max(item.value, std::abs(trilinear_b(u, v, v)) / (nu.l4_norm * nv.v_norm * nv.l4_norm));
  }
  item.passed = item.value <= item.threshold;
  item.detail = "max relative |b(u, v, v)| over " + std::to_string(triples) + " random pairs";
  return item;
}

VerifyItem divergence_item(const SimConfig& base, std::uint64_t seed, std::size_t steps, bool corrupt) {
  VerifyItem item{"divergence", false, 0.0, 1e-12, ""};
  const auto& grid = base.grid;
  NormalStream rng(seed, 7);
  const SpectralField fixture = random_field(grid, rng);
  ModeCoefficients raw = fixture.coefficients();
  if (corrupt) {
    const Wavenumber k = grid.max_wavenumber() >= 2 ? Wavenumber{1, 2} : Wavenumber{1, 1};
    const std::size_t i = grid.index(k);
    raw.c1[i] += 0.1;
    raw.c1[grid.mirror(i)] = std::conj(raw.c1[i]);
  }
  const auto fixture_defect = divergence_defect(grid, raw);
  item.value = fixture_defect.relative;
  Wavenumber worst = fixture_defect.worst_mode;
  std::string where = "fixture";

  SimConfig sim = base;
  sim.initial = fixture;
  sim.horizon = static_cast<double>(steps) * sim.dt;
  sim.epsilon = 1e-3;
  sim.record_stride = steps;
  NormalStream noise(seed, 0);
  simulate_snse(sim, noise, [&](std::size_t step, double, const SpectralField& u, std::span<const double>) {
    const auto d = divergence_defect(u);
    if (d.relative > item.value) {
      item.value = d.relative;
      worst = d.worst_mode;
      where = "step " + std::to_string(step);
    }
  });
  item.passed = item.value <= item.threshold;
  item.detail = "worst mode " + mode_name(worst) + " at " + where + " over " + std::to_string(steps) + " SNSE steps";
  return item;
}

VerifyItem stokes_item(const SimConfig& base, std::uint64_t seed) {
  VerifyItem item{"stokes", false, 0.0, 1e-10, ""};
  NormalStream rng(seed, 13);
  for (int i = 0; i < 8; ++i) {
    const auto u = random_field(base.grid, rng), v = random_field(base.grid, rng);
    const auto au = apply_stokes(u), av = apply_stokes(v);
    const double sym = std::abs(inner(au, v) - inner(u, av)) / std::sqrt(h_norm_sq(au) * h_norm_sq(av));
    const double form = std::abs(inner(au, u) - v_norm_sq(u)) / v_norm_sq(u);
    item.value = std::max({item.value, sym, form});
  }
  SimConfig sim = base;
  sim.nonlinear = false;
  sim.forcing = Forcing{};
  sim.initial = random_field(base.grid, rng);
  sim.horizon = 100 * sim.dt;
  sim.record_stride = 100;
  const auto traj = solve_deterministic(sim);
  const double e0 = h_norm_sq(traj.frames.front());
  const double balance = std::abs(h_norm_sq(traj.frames.back()) + 2.0 * traj.running_int_v_sq.back() - e0) / e0;
  item.value = std::max(item.value, balance);
  item.passed = item.value <= item.threshold;
  std::ostringstream s;
  s << "(Au, v) = (u, Av), (Au, u) = ||u||^2 and the Stokes energy balance (defect " << balance << ")";
  item.detail = s.str();
  return item;
}

VerifyItem gradient_item(const ExperimentConfig& config, const SimConfig& base, std::size_t steps,
                         std::size_t perturbations) {
  VerifyItem item{"gradient", false, 0.0, 1e-4, ""};
  SimConfig sim = base;
  sim.horizon = static_cast<double>(steps) * sim.dt;
  sim.record_stride = 1;
  sim.epsilon = 0.0;
  const Trajectory u0 = solve_deterministic(sim);
  Json spec = config.doc["experiment"]["rate"]["target"];
  spec["stride"] = steps % 5 == 0 ? 5 : 1;
  const Trajectory target = build_rate_target(spec, sim);
  const RateProblem problem(target, u0, sim, 30.0);

  const std::size_t J = sim.noise.num_modes();
  const auto lambda = sim.noise.eigenvalues();
  NormalStream rng(config.seed(), 17);
  auto draw = [&] {
    Control h(sim.horizon, steps, J);
    for (std::size_t m = 0; m < steps; ++m) {
      for (std::size_t j = 0; j < J; ++j) h.at(m)[j] = std::sqrt(lambda[j]) * rng();
    }
    return h;
  };
  const Control h = draw();
  Control grad(sim.horizon, steps, J);
  problem.objective(h, &grad);
  const double delta = 1e-5;
  for (std::size_t trial = 0; trial < perturbations; ++trial) {
    const Control d = draw();
    const double fd =
        (problem.objective(h + d * delta, nullptr) - problem.objective(h + d * -delta, nullptr)) / (2 * delta);
    double ad = 0.0;
    for (std::size_t i = 0; i < d.values().size(); ++i) ad += grad.values()[i] * d.values()[i];
    item.value = std::max(item.value, std::abs(fd - ad) / std::max(std::abs(ad), 1e-300));
  }
  item.passed = item.value <= item.threshold;
  item.detail = "max relative error of the adjoint gradient over " + std::to_string(perturbations) +
                " central differences, " + std::to_string(steps) + " steps";
  return item;
}

VerifyItem eps_zero_item(const SimConfig& base, std::uint64_t seed) {
  VerifyItem item{"eps-zero", false, 0.0, 0.0, ""};
  SimConfig sim = base;
  sim.epsilon = 0.0;
  sim.horizon = std::min<std::size_t>(base.steps(), 100) * sim.dt;
  sim.record_stride = 1;
  const auto a = solve_deterministic(sim), b = solve_snse(sim, seed);
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t i = 0; i < a.frames[r].size(); ++i) {
      item.value = std::max({item.value, std::abs(a.frames[r].c1()[i] - b.frames[r].c1()[i]),
                             std::abs(a.frames[r].c2()[i] - b.frames[r].c2()[i])});
    }
  }
  item.passed = a.frames == b.frames;
  item.detail = "solve_snse at eps = 0 against solve_deterministic, bitwise";
  return item;
}

VerifyItem assumptions_item(const SimConfig& base, std::uint64_t seed) {
  VerifyItem item{"assumptions", false, 0.0, 0.0, ""};
  const auto rep = verify_assumptions(base.noise, 200, seed);
  item.value = static_cast<double>(rep.violations.size());
  item.passed = !rep.violation;
  item.detail = rep.violation ? rep.violations.front() : "declared sigma constants bound every sample";
  return item;
}

template <class Fn>
VerifyItem guarded(const char* name, double threshold, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::numeric_limits<double>::quiet_NaN(), threshold, std::string("error: ") + e.what()};
  }
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.passed; });
}

Json VerifyReport::to_json() const {
  Json arr = Json::array();
  for (const auto& i : items) {
    arr.push_back({{"name", i.name},
                   {"passed", i.passed},
                   {"value", std::isfinite(i.value) ? Json(i.value) : Json(nullptr)},
                   {"threshold", i.threshold},
                   {"detail", i.detail}});
  }
  return {{"passed", passed()}, {"items", arr}};
}

VerifyReport verify(const ExperimentConfig& config, const VerifyOptions& options) {
  const SimConfig sim = build_sim_config(config);
  const Json& p = config.doc["experiment"]["verify"];
  const std::uint64_t seed = config.seed();
  VerifyReport rep;
  rep.items.push_back(guarded("divergence", 1e-12, [&] {
    return divergence_item(sim, seed, p["divergence_steps"], options.corrupt_divergence);
  }));
  rep.items.push_back(guarded("antisymmetry", 1e-10, [&] { return antisymmetry_item(sim.grid, seed, 16); }));
  rep.items.push_back(guarded("stokes", 1e-10, [&] { return stokes_item(sim, seed); }));
  rep.items.push_back(guarded("gradient", 1e-4, [&] {
    return gradient_item(config, sim, p["gradient_steps"], options.gradient_perturbations);
  }));
  rep.items.push_back(guarded("eps-zero", 0.0, [&] { return eps_zero_item(sim, seed); }));
  rep.items.push_back(guarded("assumptions", 0.0, [&] { return assumptions_item(sim, seed); }));
  return rep;
}

}  // namespace snse::harness
