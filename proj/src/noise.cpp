#include "snse/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snse/errors.hpp"

namespace snse {
namespace {

// Fourier amplitude of a unit-norm cos/sin mode pair: 1 / (2 pi sqrt 2).
const double kBasisAmplitude = 1.0 / (2.0 * std::numbers::pi * std::numbers::sqrt2);

bool upper_half(Wavenumber k) { return k.k1 > 0 || (k.k1 == 0 && k.k2 > 0); }

SpectralField random_field(const SpectralGrid& grid, NormalStream& rng, double v_norm) {
  ModeCoefficients c(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    if (!upper_half(k)) continue;
    const double decay = 1.0 / (1.0 + k.norm_sq());
    c.c1[i] = decay * Complex(rng(), rng());
    c.c2[i] = decay * Complex(rng(), rng());
    c.c1[grid.mirror(i)] = std::conj(c.c1[i]);
    c.c2[grid.mirror(i)] = std::conj(c.c2[i]);
  }
  SpectralField u = project_leray(grid, c);
  const double norm = std::sqrt(v_norm_sq(u));
  return norm > 0.0 ? u * (v_norm / norm) : u;
}

}  // namespace

SigmaFamily parse_sigma_family(const std::string& tag) {
  if (tag == "additive") return SigmaFamily::additive;
  if (tag == "saturated" || tag == "saturated-multiplicative") return SigmaFamily::saturated;
  throw ConfigError("unknown sigma family '" + tag + "'");
}

std::string to_string(SigmaFamily family) {
  return family == SigmaFamily::additive ? "additive" : "saturated";
}

NoiseModel::NoiseModel(const SpectralGrid& grid, const NoiseSpec& spec) : grid_(grid), spec_(spec) {
  if (spec.sigma.saturation <= 0.0) throw ParameterError("sigma saturation scale must be > 0");
  if (spec.sigma.growth < 0.0) throw ParameterError("sigma growth must be >= 0");
  // sum_k |k|^{-2s} over Z^2 is finite only for s > 1.
  if (spec.spectrum_exponent <= 1.0) throw ParameterError("spectrum exponent must exceed 1");
  const int limit = spec.max_noise_wavenumber > 0
                        ? std::min(spec.max_noise_wavenumber, grid.max_wavenumber())
                        : grid.max_wavenumber();
  std::vector<Wavenumber> ks;
  for (int k1 = -limit; k1 <= limit; ++k1) {
    for (int k2 = -limit; k2 <= limit; ++k2) {
      if (upper_half({k1, k2})) ks.push_back({k1, k2});
    }
  }
  std::sort(ks.begin(), ks.end(), [](Wavenumber a, Wavenumber b) {
    if (a.norm_sq() != b.norm_sq()) return a.norm_sq() < b.norm_sq();
    if (a.k1 != b.k1) return a.k1 < b.k1;
    return a.k2 < b.k2;
  });
  for (const auto& k : ks) {
    const double lambda = std::pow(static_cast<double>(k.norm_sq()), -spec.spectrum_exponent);
    const bool silenced = std::find(spec.sigma.silenced_modes.begin(), spec.sigma.silenced_modes.end(),
                                    k) != spec.sigma.silenced_modes.end() ||
                          std::find(spec.sigma.silenced_modes.begin(), spec.sigma.silenced_modes.end(),
                                    -k) != spec.sigma.silenced_modes.end();
    const double gain = silenced ? 0.0 : spec.sigma.amplitude;
    for (bool sine : {false, true}) {
      directions_.push_back({k, sine, lambda, gain});
      mode_index_.push_back(grid.index(k));
    }
  }
  if (spec.num_modes > 0 && spec.num_modes < directions_.size()) {
    directions_.resize(spec.num_modes);
    mode_index_.resize(spec.num_modes);
  }
}

std::vector<double> NoiseModel::eigenvalues() const {
  std::vector<double> out;
  out.reserve(directions_.size());
  for (const auto& d : directions_) out.push_back(d.eigenvalue);
  return out;
}

double NoiseModel::trace() const {
  double s = 0.0;
  for (const auto& d : directions_) s += d.eigenvalue;
  return s;
}

void NoiseModel::add_direction(std::size_t j, double scale, ModeCoefficients& c) const {
  const auto& d = directions_[j];
  const double kn = std::sqrt(static_cast<double>(d.k.norm_sq()));
  const double n1 = -d.k.k2 / kn, n2 = d.k.k1 / kn;
  const std::size_t i = mode_index_[j];
  const std::size_t m = grid_.mirror(i);
  const double a = scale * kBasisAmplitude;
  if (!d.sine) {
    c.c1[i] += a * n1;
    c.c2[i] += a * n2;
    c.c1[m] += a * n1;
    c.c2[m] += a * n2;
  } else {
    const Complex s(0.0, -a);
    c.c1[i] += s * n1;
    c.c2[i] += s * n2;
    c.c1[m] -= s * n1;
    c.c2[m] -= s * n2;
  }
}

SpectralField NoiseModel::basis_field(std::size_t j) const {
  ModeCoefficients c(grid_.size());
  add_direction(j, 1.0, c);
  return SpectralField::unchecked(grid_, std::move(c));
}

std::vector<double> NoiseModel::coordinates(const SpectralField& u) const {
  if (!(u.grid() == grid_)) throw FieldError("coordinates: grid mismatch");
  const double w = 8.0 * std::numbers::pi * std::numbers::pi * kBasisAmplitude;
  std::vector<double> out(directions_.size());
  for (std::size_t j = 0; j < directions_.size(); ++j) {
    const auto& d = directions_[j];
    const double kn = std::sqrt(static_cast<double>(d.k.norm_sq()));
    const double n1 = -d.k.k2 / kn, n2 = d.k.k1 / kn;
    const std::size_t i = mode_index_[j];
    const Complex proj = n1 * u.c1()[i] + n2 * u.c2()[i];
    out[j] = d.sine ? -w * proj.imag() : w * proj.real();
  }
  return out;
}

SpectralField NoiseModel::synthesize(std::span<const double> coords) const {
  if (coords.size() != directions_.size()) throw FieldError("synthesize: expected J coordinates");
  ModeCoefficients c(grid_.size());
  for (std::size_t j = 0; j < directions_.size(); ++j) {
    if (coords[j] != 0.0) add_direction(j, coords[j], c);
  }
  return SpectralField::unchecked(grid_, std::move(c));
}

double NoiseModel::multiplier_at(double r) const {
  if (spec_.sigma.family == SigmaFamily::additive) return 1.0;
  const double s0 = spec_.sigma.saturation;
  return 1.0 + spec_.sigma.growth * s0 * r / (s0 + r);
}

double NoiseModel::multiplier(const SpectralField& u) const {
  if (spec_.sigma.family == SigmaFamily::additive) return 1.0;
  return multiplier_at(std::sqrt(v_norm_sq(u)));
}

double NoiseModel::additive_lq_norm_sq() const {
  double s = 0.0;
  for (const auto& d : directions_) s += d.eigenvalue * d.gain * d.gain;
  return s;
}

double NoiseModel::additive_curl_lq_norm_sq() const {
  double s = 0.0;
  for (const auto& d : directions_) s += d.eigenvalue * d.gain * d.gain * d.k.norm_sq();
  return s;
}

double NoiseModel::lq_norm(const SpectralField& u) const {
  return multiplier(u) * std::sqrt(additive_lq_norm_sq());
}

double NoiseModel::lq_distance(const SpectralField& u, const SpectralField& v) const {
  return std::abs(multiplier(u) - multiplier(v)) * std::sqrt(additive_lq_norm_sq());
}

double NoiseModel::curl_lq_norm_sq(const SpectralField& u) const {
  const double m = multiplier(u);
  return m * m * additive_curl_lq_norm_sq();
}

NoiseModel::DeclaredConstants NoiseModel::declared_constants() const {
  const double c2 = additive_lq_norm_sq();
  const double cc2 = additive_curl_lq_norm_sq();
  DeclaredConstants out;
  if (spec_.sigma.family == SigmaFamily::additive) {
    out.bound = std::sqrt(c2);
    out.growth = c2;
    out.lipschitz = 0.0;
    out.curl_offset = cc2;
    out.curl_growth = 0.0;
  } else {
    const double alpha = spec_.sigma.growth;
    out.bound = (1.0 + alpha * spec_.sigma.saturation) * std::sqrt(c2);
    out.growth = 2.0 * std::max(1.0, alpha * alpha) * c2;
    out.lipschitz = alpha * std::sqrt(c2);
    out.curl_offset = 2.0 * cc2;
    out.curl_growth = 2.0 * alpha * alpha * cc2;
  }
  return out;
}

std::vector<double> sample_wiener_increment(const NoiseModel& model, double dt, NormalStream& rng) {
  if (dt < 0.0) throw ParameterError("sample_wiener_increment: dt must be >= 0");
  std::vector<double> xi(model.num_modes());
  const auto dirs = model.directions();
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const double z = rng();
    xi[j] = std::sqrt(dirs[j].eigenvalue * dt) * z;
  }
  return xi;
}

SpectralField sigma_apply(const NoiseModel& model, double /*t*/, const SpectralField& u,
                          std::span<const double> xi) {
  if (xi.size() != model.num_modes()) {
    throw FieldError("sigma_apply: xi has " + std::to_string(xi.size()) + " coefficients, expected " +
                     std::to_string(model.num_modes()));
  }
  const double m = model.multiplier(u);
  const auto dirs = model.directions();
  std::vector<double> coords(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) coords[j] = m * dirs[j].gain * xi[j];
  return model.synthesize(coords);
}

AssumptionReport verify_assumptions(const NoiseModel& model, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw ParameterError("verify_assumptions: need at least 100 samples");
  AssumptionReport report;
  report.samples = n_samples;
  report.declared = model.declared_constants();
  const auto& grid = model.grid();
  NormalStream rng(seed, 0);

  const SpectralField zero(grid);
  report.estimated.curl_offset = model.curl_lq_norm_sq(zero);
  for (std::size_t s = 0; s < n_samples; ++s) {
    // Norms log-uniform over [1e-3, 1e3].
    const double r = std::pow(10.0, -3.0 + 6.0 * (static_cast<double>(s) + 0.5) / n_samples);
    const SpectralField u = random_field(grid, rng, r);
    const double perturb = std::pow(10.0, -4.0 + 5.0 * std::fmod(0.618034 * s, 1.0)) * r;
    const SpectralField v = u + random_field(grid, rng, perturb);
    const double vn = std::sqrt(v_norm_sq(u));
    const double lq = model.lq_norm(u);
    auto& e = report.estimated;
    e.bound = std::max(e.bound, lq);
    e.growth = std::max(e.growth, lq * lq / (1.0 + vn * vn));
    const double duv = std::sqrt(v_norm_sq(u - v));
    if (duv > 0.0) e.lipschitz = std::max(e.lipschitz, model.lq_distance(u, v) / duv);
    const double curl = model.curl_lq_norm_sq(u);
    e.curl_growth = std::max(e.curl_growth, std::max(0.0, curl - report.declared.curl_offset) / (vn * vn));
  }

  auto check = [&](const char* name, double est, double declared) {
    if (est > declared * (1.0 + 1e-9) + 1e-14) {
      report.violation = true;
      report.violations.push_back(std::string(name) + " estimate " + std::to_string(est) +
                                  " exceeds declared " + std::to_string(declared));
    }
  };
  check("bound", report.estimated.bound, report.declared.bound);
  check("growth", report.estimated.growth, report.declared.growth);
  check("lipschitz", report.estimated.lipschitz, report.declared.lipschitz);
  check("curl_offset", report.estimated.curl_offset, report.declared.curl_offset);
  check("curl_growth", report.estimated.curl_growth, report.declared.curl_growth);

  NormalStream shape_rng(seed, 1);
  const SpectralField shape = random_field(grid, shape_rng, 1.0);
  double previous = -1.0;
  for (int i = 0; i <= 45; ++i) {
    const double r = std::pow(10.0, -3.0 + 0.2 * i);
    const double lq = model.lq_norm(shape * r);
    report.saturation_sweep.push_back({r, lq});
    if (lq < previous * (1.0 - 1e-12)) report.sweep_monotone = false;
    previous = lq;
  }
  const double plateau = report.saturation_sweep.back().lq_norm;
  const double unsaturated = model.spec().sigma.growth * report.saturation_sweep.back().v_norm *
                             std::sqrt(model.additive_lq_norm_sq());
  report.bounded_only_by_saturation = model.spec().sigma.family == SigmaFamily::saturated &&
                                      model.spec().sigma.growth > 0.0 &&
                                      plateau >= 0.9 * report.declared.bound && unsaturated > plateau;
  return report;
}

Control::Control(double horizon, std::size_t steps, std::size_t num_modes)
    : Control(horizon, steps, num_modes, std::vector<double>(steps * num_modes, 0.0)) {}

Control::Control(double horizon, std::size_t steps, std::size_t num_modes, std::vector<double> values)
    : horizon_(horizon), steps_(steps), num_modes_(num_modes), values_(std::move(values)) {
  if (horizon < 0.0) throw ParameterError("control horizon must be >= 0");
  if (values_.size() != steps * num_modes) throw FieldError("control values must be steps x J");
}

Control Control::operator+(const Control& other) const {
  if (other.steps_ != steps_ || other.num_modes_ != num_modes_) throw FieldError("control shape mismatch");
  Control out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] += other.values_[i];
  return out;
}

Control Control::operator*(double scale) const {
  Control out = *this;
  for (auto& v : out.values_) v *= scale;
  return out;
}

Control Control::refined(std::size_t factor) const {
  Control out(horizon_, steps_ * factor, num_modes_);
  for (std::size_t m = 0; m < steps_; ++m) {
    for (std::size_t r = 0; r < factor; ++r) {
      std::copy(at(m).begin(), at(m).end(), out.at(m * factor + r).begin());
    }
  }
  return out;
}

double control_energy(const Control& h, std::span<const double> eigenvalues) {
  if (eigenvalues.size() != h.num_modes()) throw FieldError("control_energy: eigenvalue count mismatch");
  double total = 0.0;
  for (std::size_t m = 0; m < h.steps(); ++m) {
    const auto row = h.at(m);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * row[j] / eigenvalues[j];
    total += s;
  }
  return total * h.dt();
}

double control_energy(const Control& h, const NoiseModel& model) {
  return control_energy(h, model.eigenvalues());
}

bool in_level_set(const Control& h, const NoiseModel& model, double level) {
  return control_energy(h, model) <= level;
}

}  // namespace snse
