#include "snse/field.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "snse/errors.hpp"

namespace snse {
namespace {

constexpr double kDivergenceTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-12;

double max_amplitude(const ModeCoefficients& c) {
  double m = 0.0;
  for (std::size_t i = 0; i < c.c1.size(); ++i) {
    m = std::max({m, std::abs(c.c1[i]), std::abs(c.c2[i])});
  }
  return m;
}

void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw FieldError("fields live on different grids");
}

void require_size(const SpectralGrid& grid, const ModeCoefficients& raw) {
  if (raw.c1.size() != grid.size() || raw.c2.size() != grid.size()) {
    throw FieldError("coefficient arrays do not match the grid box");
  }
}

// Per-mode Leray projection in place. Also clears the mean.
void project_in_place(const SpectralGrid& grid, ModeCoefficients& c) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    const int kk = k.norm_sq();
    if (kk == 0) {
      c.c1[i] = c.c2[i] = Complex{};
      continue;
    }
    const Complex dot = static_cast<double>(k.k1) * c.c1[i] + static_cast<double>(k.k2) * c.c2[i];
    const Complex s = dot / static_cast<double>(kk);
    c.c1[i] -= s * static_cast<double>(k.k1);
    c.c2[i] -= s * static_cast<double>(k.k2);
  }
}

// Physical samples of (a + i b) where a, b are the real fields with coefficients ca, cb.
void synthesize_pair(const SpectralGrid& grid, std::span<const Complex> ca,
                     std::span<const Complex> cb, int points, std::vector<Complex>& out) {
  thread_local std::vector<Complex> packed;
  packed.resize(grid.size());
  const Complex i1(0.0, 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) packed[i] = ca[i] + i1 * cb[i];
  detail::synthesize(grid, packed, points, out);
}

// Coefficients of d_1 f and d_2 f.
void gradient(const SpectralGrid& grid, std::span<const Complex> f, std::vector<Complex>& d1,
              std::vector<Complex>& d2) {
  d1.resize(grid.size());
  d2.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    d1[i] = Complex(0.0, k.k1) * f[i];
    d2[i] = Complex(0.0, k.k2) * f[i];
  }
}

// Box coefficients of the real pair (w1, w2) given physical samples.
ModeCoefficients analyze_pair(const SpectralGrid& grid, const std::vector<Complex>& packed_physical,
                              int points) {
  thread_local std::vector<Complex> spectrum;
  detail::analyze(grid, packed_physical, points, spectrum);
  ModeCoefficients out;
  detail::split_real_pair(grid, spectrum, out.c1, out.c2);
  return out;
}

}  // namespace

SpectralField::SpectralField(SpectralGrid grid)
    : grid_(grid), coeffs_(grid.size()) {}

SpectralField::SpectralField(SpectralGrid grid, ModeCoefficients coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {}

SpectralField SpectralField::unchecked(const SpectralGrid& grid, ModeCoefficients coeffs) {
  require_size(grid, coeffs);
  return SpectralField(grid, std::move(coeffs));
}

SpectralField SpectralField::from_coefficients(const SpectralGrid& grid, ModeCoefficients coeffs) {
  require_size(grid, coeffs);
  const auto sym = symmetry_defect(grid, coeffs);
  if (sym.relative > kSymmetryTolerance) {
    throw FieldError("coefficients lack conjugate symmetry at mode (" +
                     std::to_string(sym.worst_mode.k1) + "," + std::to_string(sym.worst_mode.k2) + ")");
  }
  const std::size_t zero = grid.zero_index();
  if (std::abs(coeffs.c1[zero]) != 0.0 || std::abs(coeffs.c2[zero]) != 0.0) {
    throw FieldError("field has a nonzero mean mode");
  }
  const auto div = divergence_defect(grid, coeffs);
  if (div.relative > kDivergenceTolerance) {
    throw FieldError("field is not divergence-free at mode (" + std::to_string(div.worst_mode.k1) +
                     "," + std::to_string(div.worst_mode.k2) + ")");
  }
  return SpectralField(grid, std::move(coeffs));
}

SpectralField SpectralField::operator+(const SpectralField& other) const { return axpy(1.0, other); }
SpectralField SpectralField::operator-(const SpectralField& other) const { return axpy(-1.0, other); }

SpectralField SpectralField::operator*(double scale) const {
  ModeCoefficients c = coeffs_;
  for (std::size_t i = 0; i < c.c1.size(); ++i) {
    c.c1[i] *= scale;
    c.c2[i] *= scale;
  }
  return SpectralField(grid_, std::move(c));
}

SpectralField SpectralField::axpy(double alpha, const SpectralField& other) const {
  require_same_grid(*this, other);
  ModeCoefficients c = coeffs_;
  for (std::size_t i = 0; i < c.c1.size(); ++i) {
    c.c1[i] += alpha * other.coeffs_.c1[i];
    c.c2[i] += alpha * other.coeffs_.c2[i];
  }
  return SpectralField(grid_, std::move(c));
}

DivergenceDefect divergence_defect(const SpectralGrid& grid, const ModeCoefficients& raw) {
  require_size(grid, raw);
  DivergenceDefect out;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    const double d = std::abs(static_cast<double>(k.k1) * raw.c1[i] + static_cast<double>(k.k2) * raw.c2[i]);
    if (d > worst) {
      worst = d;
      out.worst_mode = k;
    }
  }
  const double scale = max_amplitude(raw);
  out.relative = scale > 0.0 ? worst / scale : 0.0;
  return out;
}

DivergenceDefect divergence_defect(const SpectralField& u) {
  return divergence_defect(u.grid(), u.coefficients());
}

SymmetryDefect symmetry_defect(const SpectralGrid& grid, const ModeCoefficients& raw) {
  require_size(grid, raw);
  SymmetryDefect out;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t m = grid.mirror(i);
    const double d = std::max(std::abs(raw.c1[m] - std::conj(raw.c1[i])),
                              std::abs(raw.c2[m] - std::conj(raw.c2[i])));
    if (d > worst) {
      worst = d;
      out.worst_mode = grid.wavenumber(i);
    }
  }
  const double scale = max_amplitude(raw);
  out.relative = scale > 0.0 ? worst / scale : 0.0;
  return out;
}

SpectralField project_leray(const SpectralGrid& grid, const ModeCoefficients& raw) {
  require_size(grid, raw);
  const auto sym = symmetry_defect(grid, raw);
  if (sym.relative > 1e-10) {
    throw FieldError("project_leray: input lacks conjugate symmetry at mode (" +
                     std::to_string(sym.worst_mode.k1) + "," + std::to_string(sym.worst_mode.k2) + ")");
  }
  ModeCoefficients c = raw;
  project_in_place(grid, c);
  return SpectralField::unchecked(grid, std::move(c));
}

SpectralField apply_stokes(const SpectralField& u) {
  const auto& grid = u.grid();
  ModeCoefficients c = u.coefficients();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double kk = grid.wavenumber(i).norm_sq();
    c.c1[i] *= kk;
    c.c2[i] *= kk;
  }
  return SpectralField::unchecked(grid, std::move(c));
}

SpectralField bilinear_B(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v);
  const auto& grid = u.grid();
  grid.require_dealiasing();
  const int n = grid.resolution();

  thread_local std::vector<Complex> pu, pv1, pv2, d1, d2, product;
  synthesize_pair(grid, u.c1(), u.c2(), n, pu);
  gradient(grid, v.c1(), d1, d2);
  synthesize_pair(grid, d1, d2, n, pv1);
  gradient(grid, v.c2(), d1, d2);
  synthesize_pair(grid, d1, d2, n, pv2);

  product.resize(pu.size());
  for (std::size_t p = 0; p < pu.size(); ++p) {
    const double u1 = pu[p].real(), u2 = pu[p].imag();
    const double w1 = u1 * pv1[p].real() + u2 * pv1[p].imag();
    const double w2 = u1 * pv2[p].real() + u2 * pv2[p].imag();
    product[p] = Complex(w1, w2);
  }
  ModeCoefficients c = analyze_pair(grid, product, n);
  project_in_place(grid, c);
  return SpectralField::unchecked(grid, std::move(c));
}

SpectralField bilinear_B_first_transpose(const SpectralField& v, const SpectralField& y) {
  require_same_grid(v, y);
  const auto& grid = v.grid();
  grid.require_dealiasing();
  const int n = grid.resolution();

  thread_local std::vector<Complex> py, pv1, pv2, d1, d2, product;
  synthesize_pair(grid, y.c1(), y.c2(), n, py);
  gradient(grid, v.c1(), d1, d2);
  synthesize_pair(grid, d1, d2, n, pv1);  // d1 v1 + i d2 v1
  gradient(grid, v.c2(), d1, d2);
  synthesize_pair(grid, d1, d2, n, pv2);  // d1 v2 + i d2 v2

  product.resize(py.size());
  for (std::size_t p = 0; p < py.size(); ++p) {
    const double y1 = py[p].real(), y2 = py[p].imag();
    const double r1 = pv1[p].real() * y1 + pv2[p].real() * y2;
    const double r2 = pv1[p].imag() * y1 + pv2[p].imag() * y2;
    product[p] = Complex(r1, r2);
  }
  ModeCoefficients c = analyze_pair(grid, product, n);
  project_in_place(grid, c);
  return SpectralField::unchecked(grid, std::move(c));
}

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += (std::conj(u.c1()[i]) * v.c1()[i] + std::conj(u.c2()[i]) * v.c2()[i]).real();
  }
  return SpectralGrid::kArea * s;
}

double h_norm_sq(const SpectralField& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(u.c1()[i]) + std::norm(u.c2()[i]);
  return SpectralGrid::kArea * s;
}

double v_norm_sq(const SpectralField& u) {
  const auto& grid = u.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += grid.wavenumber(i).norm_sq() * (std::norm(u.c1()[i]) + std::norm(u.c2()[i]));
  }
  return SpectralGrid::kArea * s;
}

double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
  require_same_grid(u, w);
  return inner(bilinear_B(u, v), w);
}

ScalarField curl2d(const SpectralField& u) {
  const auto& grid = u.grid();
  ScalarField w{grid, std::vector<Complex>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Wavenumber k = grid.wavenumber(i);
    w.coeffs[i] = Complex(0.0, 1.0) * (static_cast<double>(k.k1) * u.c2()[i] -
                                        static_cast<double>(k.k2) * u.c1()[i]);
  }
  return w;
}

double scalar_l2_norm(const ScalarField& w) {
  double s = 0.0;
  for (const auto& c : w.coeffs) s += std::norm(c);
  return std::sqrt(SpectralGrid::kArea * s);
}

PhysicalVelocity to_physical(const SpectralField& u, int points) {
  const auto& grid = u.grid();
  if (points == 0) points = grid.resolution();
  if (points <= 2 * grid.max_wavenumber()) throw ConfigError("to_physical: too few points for the box");
  std::vector<Complex> packed;
  synthesize_pair(grid, u.c1(), u.c2(), points, packed);
  PhysicalVelocity out;
  out.points = points;
  out.u1.resize(packed.size());
  out.u2.resize(packed.size());
  for (std::size_t p = 0; p < packed.size(); ++p) {
    out.u1[p] = packed[p].real();
    out.u2[p] = packed[p].imag();
  }
  return out;
}

NormBundle norms(const SpectralField& u) {
  const auto& grid = u.grid();
  NormBundle out;
  out.h_norm = std::sqrt(h_norm_sq(u));
  out.v_norm = std::sqrt(v_norm_sq(u));
  // |u|^4 is a trigonometric polynomial of degree 4K; Nq > 4K points integrate it exactly.
  int points = std::max(grid.resolution(), 4 * grid.max_wavenumber() + 2);
  const auto phys = to_physical(u, points);
  double s = 0.0;
  for (std::size_t p = 0; p < phys.u1.size(); ++p) {
    const double m = phys.u1[p] * phys.u1[p] + phys.u2[p] * phys.u2[p];
    s += m * m;
  }
  const double cell = SpectralGrid::kArea / static_cast<double>(phys.u1.size());
  out.l4_norm = std::pow(s * cell, 0.25);
  return out;
}

}  // namespace snse
