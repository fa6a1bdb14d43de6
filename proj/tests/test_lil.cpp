#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "snse/errors.hpp"
#include "snse/lil.hpp"

using namespace snse;

namespace {

SimConfig one_direction(double T, double dt) {
  auto c = fixture::single_mode_config(T, dt, 0.0);
  NoiseSpec s;
  s.num_modes = 1;
  c.noise = NoiseModel(c.grid, s);
  return c;
}

}  // namespace

TEST_CASE("LilSchedule") {
  LilSchedule s{2.0, 4, 8};
  CHECK_NOTHROW(s.validate());
  CHECK(s.eps_grid().size() == 5);
  CHECK(s.eps(4) == 1.0 / 16);
  CHECK_THROWS_AS((LilSchedule{2.0, 3, 8}.validate()), ParameterError);  // 1/8 > e^{-e}
  CHECK_THROWS_AS((LilSchedule{1.0, 4, 8}.validate()), ParameterError);
  CHECK_THROWS_AS(s.validate(1.0 / 78), ParameterError);  // needs j_min > log2(78)
  CHECK_NOTHROW((LilSchedule{2.0, 7, 9}.validate(1.0 / 78)));
}

TEST_CASE("z_process") {
  auto config = fixture::nonlinear_config(0.1, 1e-3, 1e-3);
  config.record_stride = 10;
  const auto u0 = solve_deterministic(config);
  const auto ue = solve_snse(config, 3);

  SUBCASE("u^eps = u0 gives zero") {
    const auto z = z_process(u0, u0, 1e-3);
    for (const auto& f : z.frames) CHECK(h_norm_sq(f) == 0.0);
    CHECK(z.running_int_v_sq.back() == 0.0);
  }

  SUBCASE("homogeneous of degree one in u^eps - u0") {
    const double alpha = 0.375;
    Trajectory mix = ue;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.frames[i] = ue.frames[i] * alpha + u0.frames[i] * (1 - alpha);
    const auto z1 = z_process(ue, u0, 1e-3);
    const auto za = z_process(mix, u0, 1e-3);
    for (std::size_t i = 0; i < z1.size(); ++i) {
      CHECK(std::sqrt(h_norm_sq(za.frames[i] - z1.frames[i] * alpha)) <= 1e-13 * (1 + std::sqrt(h_norm_sq(za.frames[i]))));
    }
    CHECK(energy_norm(za) == doctest::Approx(alpha * energy_norm(z1)).epsilon(1e-12));
  }

  SUBCASE("running functionals match energy_norm") {
    const auto z = z_process(ue, u0, 1e-3);
    CHECK(std::sqrt(z.running_sup_h_sq.back() + z.running_int_v_sq.back()) ==
          doctest::Approx(energy_norm(z)).epsilon(1e-14));
  }

  SUBCASE("eps range") {
    CHECK_THROWS_AS(z_process(ue, u0, 0.1), ParameterError);
    CHECK_THROWS_AS(z_process(ue, u0, 0.0), ParameterError);
  }

  SUBCASE("OU variance scaled by 2 eps loglog") {
    auto lin = fixture::linear_config(1, 0.5, 1e-2, 1e-4);
    lin.record_stride = 50;
    const auto base = solve_deterministic(lin);
    const std::size_t n = 3000;
    const auto dirs = lin.noise.directions();
    std::vector<double> s(dirs.size(), 0), s2(dirs.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto z = z_process(sample_snse(lin, 8, p), base, 1e-4);
      const auto x = lin.noise.coordinates(z.frames.back());
      for (std::size_t j = 0; j < x.size(); ++j) {
        s[j] += x[j];
        s2[j] += x[j] * x[j];
      }
    }
    const double ll = loglog_inverse(1e-4);
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      const double var = oracle::ou_variance(1e-4 * dirs[j].eigenvalue, dirs[j].k.norm_sq(), 0.5) / (2e-4 * ll);
      const double m = s[j] / n, v = s2[j] / n - m * m;
      CHECK(std::abs(v - var) < 3 * var * std::sqrt(2.0 / (n - 1)));
    }
  }
}

TEST_CASE("LimitSetProbe and limit_set_distance") {
  auto config = fixture::linear_config(2, 0.5, 1e-2, 0.0);
  config.record_stride = 5;
  auto every = config;
  every.record_stride = 1;
  const auto u0_full = solve_deterministic(every);
  const auto probe = LimitSetProbe::sinusoid_family(u0_full, config, 3, 2, 0.1);
  CHECK(probe.size() == 1 + 3 * 2 * 2);
  for (std::size_t i = 0; i < probe.size(); ++i) CHECK(0.5 * control_energy(probe.control(i), config.noise) <= 1 + 1e-12);

  SUBCASE("zero on candidates") {
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const auto d = limit_set_distance(probe.image(i), probe);
      CHECK(d.distance == 0.0);
      CHECK(d.nearest == i);
    }
  }

  SUBCASE("over-energy candidates are rejected") {
    LimitSetProbe p(u0_full, config, 0.1);
    Control h = probe.control(1) * 1.01;
    CHECK_THROWS_AS(p.add(h), ParameterError);
  }

  SUBCASE("adding candidates never increases the distance") {
    const auto u0 = solve_deterministic(config);
    auto noisy = config;
    noisy.epsilon = 1e-4;
    const auto z = z_process(solve_snse(noisy, 4), u0, 1e-4);
    LimitSetProbe grow(u0_full, config, 0.1);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probe.size(); ++i) {
      grow.add(probe.control(i));
      const double d = limit_set_distance(z, grow).distance;
      CHECK(d <= prev);
      prev = d;
    }
    CHECK(prev == limit_set_distance(z, probe).distance);
  }
}

TEST_CASE("strassen_cluster_study") {
  auto config = one_direction(0.5, 1e-2);
  config.record_stride = 5;
  auto every = config;
  every.record_stride = 1;
  const auto u0_full = solve_deterministic(every);
  McOptions opt;
  opt.samples = 40;
  opt.seed = 12;
  const LilSchedule sched{2.0, 4, 9};

  SUBCASE("degenerate probe and schedule") {
    LimitSetProbe zero(u0_full, config, 0.5);
    zero.add(Control(0.5, config.steps(), 1));
    const auto rep = strassen_cluster_study(LilSchedule{2.0, 5, 5}, zero, config, opt);
    REQUIRE(rep.distance.size() == opt.samples);
    const auto u0 = solve_deterministic(config);
    for (std::size_t r = 0; r < opt.samples; ++r) {
      REQUIRE(rep.distance[r].size() == 1);
      auto c = config;
      c.epsilon = sched.eps(5);
      const auto z = z_process(sample_snse(c, opt.seed, r), u0, c.epsilon);
      CHECK(rep.distance[r][0] == doctest::Approx(energy_norm(z)).epsilon(1e-12));
    }
  }

  SUBCASE("infinite tolerance") {
    const auto probe = LimitSetProbe::sinusoid_family(u0_full, config, 1, 2, 1e300);
    const auto rep = strassen_cluster_study(sched, probe, config, opt);
    for (double f : rep.hit_fraction) CHECK(f == 1.0);
  }

  SUBCASE("refinement never increases the distance") {
    const auto coarse = LimitSetProbe::sinusoid_family(u0_full, config, 1, 2, 0.2);
    auto fine = LimitSetProbe::sinusoid_family(u0_full, config, 1, 2, 0.2);
    // 10x denser random sampling of the boundary {(1/2) energy = 1}
    NormalStream rng(77, 0);
    const std::size_t M = config.steps();
    for (std::size_t k = 0; k < 10 * coarse.size(); ++k) {
      Control h(0.5, M, 1);
      double c[4];
      for (double& v : c) v = rng();
      for (std::size_t m = 0; m < M; ++m) {
        const double t = (m + 0.5) * config.dt / 0.5;
        double s = 0;
        for (int q = 0; q < 4; ++q) s += c[q] * std::sin(std::numbers::pi * (q + 1) * t);
        h.at(m)[0] = s;
      }
      fine.add(h * (std::sqrt(2.0 / control_energy(h, config.noise)) * (1 - 1e-15)));
    }
    const auto a = strassen_cluster_study(sched, coarse, config, opt);
    const auto b = strassen_cluster_study(sched, fine, config, opt);
    double gain = 0;
    for (std::size_t r = 0; r < opt.samples; ++r) {
      for (std::size_t k = 0; k < a.j.size(); ++k) {
        CHECK(b.distance[r][k] <= a.distance[r][k]);
        gain = std::max(gain, a.distance[r][k] - b.distance[r][k]);
      }
    }
    MESSAGE("largest distance reduction from the dense probe: " << gain);
  }
}

TEST_CASE("classical_ratio_study") {
  auto config = one_direction(1.0, 1e-2);
  McOptions opt;
  opt.samples = 2000;
  opt.seed = 4;
  const LilSchedule sched{2.0, 4, 10};

  SUBCASE("noise off gives zero ratios") {
    auto silent = config;
    NoiseSpec s;
    s.num_modes = 1;
    s.sigma.amplitude = 0.0;
    silent.noise = NoiseModel(config.grid, s);
    McOptions few = opt;
    few.samples = 5;
    const auto rep = classical_ratio_study(sched, silent, few);
    for (const auto& row : rep.ratio)
      for (double v : row) CHECK(v == 0.0);
  }

  SUBCASE("quantiles against the oversampled OU oracle") {
    const auto rep = classical_ratio_study(sched, config, opt);
    for (const auto& row : rep.ratio)
      for (double v : row) CHECK(v >= 0.0);
    const auto ref = oracle::ou_path_functionals({{1.0, 1.0, 1.0, 0.0}}, 1.0, config.steps(), 10 * opt.samples, 1.0, 1.0, 5);
    std::vector<double> base;
    for (const auto& s : ref) base.push_back(std::sqrt(s.deviation_sq));
    for (std::size_t k = 0; k < rep.j.size(); ++k) {
      const double scale = 1.0 / std::sqrt(2.0 * loglog_inverse(rep.eps[k]));
      std::vector<double> scaled(base);
      for (auto& v : scaled) v *= scale;
      const double qs[3] = {0.1, 0.5, 0.9};
      for (int i = 0; i < 3; ++i) {
        const double F = empirical_cdf(scaled, rep.quantiles[k][i]);
        const double se = std::sqrt(qs[i] * (1 - qs[i]) * (1.0 / opt.samples + 1.0 / scaled.size()));
        CHECK(std::abs(F - qs[i]) <= 3 * se);
      }
    }
    MESSAGE("mean ratio trend in j: slope " << rep.trend.slope);
  }
}
