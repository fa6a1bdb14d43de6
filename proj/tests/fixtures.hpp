#pragma once

#include "oracles.hpp"
#include "snse/solvers.hpp"

namespace snse::fixture {

inline NoiseModel additive_noise(const SpectralGrid& grid, double amplitude = 1.0, int max_noise_k = 0) {
  NoiseSpec spec;
  spec.sigma.amplitude = amplitude;
  spec.max_noise_wavenumber = max_noise_k;
  return NoiseModel(grid, spec);
}

/// Linear regime (B off, f = 0, additive sigma) on a small grid.
inline SimConfig linear_config(int K, double T, double dt, double eps, int max_noise_k = 0) {
  const SpectralGrid grid(K, 3 * K + 1 + (3 * K + 1) % 2);
  SimConfig c(grid, additive_noise(grid, 1.0, max_noise_k));
  c.horizon = T;
  c.dt = dt;
  c.epsilon = eps;
  c.nonlinear = false;
  return c;
}

/// Single mode pair k = (1,0): one cos and one sin noise direction.
inline SimConfig single_mode_config(double T, double dt, double eps) {
  const SpectralGrid grid(1, 4);
  NoiseSpec spec;
  spec.num_modes = 2;
  SimConfig c(grid, NoiseModel(grid, spec));
  c.horizon = T;
  c.dt = dt;
  c.epsilon = eps;
  c.nonlinear = false;
  return c;
}

inline SpectralField random_initial(const SpectralGrid& grid, std::uint64_t seed, double h_norm) {
  NormalStream rng(seed, 99);
  const SpectralField u = oracle::random_field(grid, rng, 1.5);
  return u * (h_norm / std::sqrt(h_norm_sq(u)));
}

inline SimConfig nonlinear_config(double T, double dt, double eps) {
  const SpectralGrid grid(4, 13);
  SimConfig c(grid, additive_noise(grid, 0.5));
  c.horizon = T;
  c.dt = dt;
  c.epsilon = eps;
  c.nonlinear = true;
  c.initial = random_initial(grid, 5, 4.0);
  return c;
}

}  // namespace snse::fixture
