#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snse/field.hpp"
#include "snse/rng.hpp"

namespace snse {

/// One real noise direction e_j: a unit-H-norm divergence-free mode pair
/// (k^perp/|k|) cos(k.x) / (pi sqrt 2)  or  (k^perp/|k|) sin(k.x) / (pi sqrt 2).
struct NoiseDirection {
  Wavenumber k;        ///< representative in the upper half plane
  bool sine = false;
  double eigenvalue = 0.0;  ///< lambda_j
  double gain = 0.0;        ///< g_j
};

enum class SigmaFamily { additive, saturated };

SigmaFamily parse_sigma_family(const std::string& tag);
std::string to_string(SigmaFamily family);

struct SigmaParams {
  SigmaFamily family = SigmaFamily::additive;
  double amplitude = 1.0;    ///< base gain g
  double saturation = 1.0;   ///< s0 > 0
  double growth = 1.0;       ///< alpha >= 0, slope of the multiplier at ||u|| = 0
  /// Modes whose gain is forced to zero (targets exciting them are unreachable).
  std::vector<Wavenumber> silenced_modes;
};

struct NoiseSpec {
  double spectrum_exponent = 2.0;  ///< lambda_j = |k_j|^{-2s}
  std::size_t num_modes = 0;       ///< J; 0 keeps every direction of the grid box
  /// Keep only directions with |k|_inf <= this (0 = all). Applied before num_modes.
  int max_noise_wavenumber = 0;
  SigmaParams sigma;
};

/// Q-Wiener noise on H with the diagonal sigma(t,u) families.
///
/// sigma(t,u) xi = m(||u||) sum_j g_j xi_j e_j, with m = 1 for the additive family and
/// m(r) = 1 + alpha s0 r / (s0 + r) for the saturated one. The L_Q norm is then
/// m(||u||) sqrt(sum_j lambda_j g_j^2).
class NoiseModel {
 public:
  NoiseModel(const SpectralGrid& grid, const NoiseSpec& spec);

  const SpectralGrid& grid() const { return grid_; }
  const NoiseSpec& spec() const { return spec_; }
  std::size_t num_modes() const { return directions_.size(); }
  std::span<const NoiseDirection> directions() const { return directions_; }
  std::vector<double> eigenvalues() const;
  double trace() const;  ///< sum_j lambda_j

  /// Unit basis field e_j.
  SpectralField basis_field(std::size_t j) const;
  /// (u, e_j)_H for every j.
  std::vector<double> coordinates(const SpectralField& u) const;
  /// sum_j c_j e_j (coefficients in H coordinates).
  SpectralField synthesize(std::span<const double> coords) const;

  /// m(||u||).
  double multiplier(const SpectralField& u) const;
  double multiplier_at(double v_norm) const;

  /// sum_j lambda_j g_j^2 and sum_j lambda_j g_j^2 |k_j|^2.
  double additive_lq_norm_sq() const;
  double additive_curl_lq_norm_sq() const;

  double lq_norm(const SpectralField& u) const;
  double lq_distance(const SpectralField& u, const SpectralField& v) const;
  double curl_lq_norm_sq(const SpectralField& u) const;

  /// Declared constants of the family (what Assumptions H1/H2 are checked against).
  struct DeclaredConstants {
    double bound = 0.0;          ///< C~
    double growth = 0.0;         ///< K2
    double lipschitz = 0.0;      ///< K3
    double curl_offset = 0.0;    ///< K~0
    double curl_growth = 0.0;    ///< K~1
  };
  DeclaredConstants declared_constants() const;

 private:
  // Adds scale * e_j into coefficient arrays.
  void add_direction(std::size_t j, double scale, ModeCoefficients& c) const;

  SpectralGrid grid_;
  NoiseSpec spec_;
  std::vector<NoiseDirection> directions_;
  std::vector<std::size_t> mode_index_;  // box index of k_j
};

/// Wiener increment in H coordinates: xi_j = sqrt(lambda_j dt) N(0,1).
/// Throws ParameterError for dt < 0.
std::vector<double> sample_wiener_increment(const NoiseModel& model, double dt, NormalStream& rng);

/// sigma(t,u) xi. Throws FieldError when xi has the wrong dimension.
SpectralField sigma_apply(const NoiseModel& model, double t, const SpectralField& u,
                          std::span<const double> xi);

struct SaturationSample {
  double v_norm = 0.0;
  double lq_norm = 0.0;
};

struct AssumptionReport {
  std::size_t samples = 0;
  NoiseModel::DeclaredConstants declared;
  NoiseModel::DeclaredConstants estimated;  ///< max observed ratios
  bool violation = false;
  std::vector<std::string> violations;
  /// ||sigma(t,u)||_{L_Q} along a sweep of ||u||; monotone with a plateau for the
  /// saturated family.
  std::vector<SaturationSample> saturation_sweep;
  bool sweep_monotone = true;
  bool bounded_only_by_saturation = false;
};

/// Empirical estimates of C~, K2, K3, K~0, K~1 over random (t, u, v). Throws
/// ParameterError for n_samples < 100.
AssumptionReport verify_assumptions(const NoiseModel& model, std::size_t n_samples,
                                    std::uint64_t seed = 7);

/// Piecewise-constant Cameron-Martin control on a uniform grid of `steps` cells over [0, T].
class Control {
 public:
  Control(double horizon, std::size_t steps, std::size_t num_modes);
  /// values is row-major steps x num_modes.
  Control(double horizon, std::size_t steps, std::size_t num_modes, std::vector<double> values);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t num_modes() const { return num_modes_; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }

  std::span<const double> at(std::size_t step) const {
    return {values_.data() + step * num_modes_, num_modes_};
  }
  std::span<double> at(std::size_t step) { return {values_.data() + step * num_modes_, num_modes_}; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Control operator+(const Control& other) const;
  Control operator*(double scale) const;

  /// Same path on a grid with `factor` times more cells.
  Control refined(std::size_t factor) const;

 private:
  double horizon_;
  std::size_t steps_;
  std::size_t num_modes_;
  std::vector<double> values_;
};

/// sum_m |h_m|_0^2 dt with |h|_0^2 = sum_j h_j^2 / lambda_j.
double control_energy(const Control& h, std::span<const double> eigenvalues);
double control_energy(const Control& h, const NoiseModel& model);
bool in_level_set(const Control& h, const NoiseModel& model, double level);

}  // namespace snse
