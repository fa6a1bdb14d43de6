#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "snse/grid.hpp"

namespace snse {

using Complex = std::complex<double>;

/// Unvalidated per-mode complex 2-vectors over a grid's coefficient box.
struct ModeCoefficients {
  std::vector<Complex> c1;
  std::vector<Complex> c2;

  explicit ModeCoefficients(std::size_t n = 0) : c1(n), c2(n) {}

  bool operator==(const ModeCoefficients&) const = default;
};

/// Divergence-free, conjugate-symmetric, mean-zero velocity field on the torus,
/// u(x) = sum_k u_k exp(i k.x). Immutable once built.
class SpectralField {
 public:
  /// Zero field.
  explicit SpectralField(SpectralGrid grid);

  /// Validates conjugate symmetry, zero mean and k.u_k = 0 (relative tolerance);
  /// throws FieldError otherwise. Use project_leray for non-solenoidal input.
  static SpectralField from_coefficients(const SpectralGrid& grid, ModeCoefficients coeffs);

  /// No validation. Intended for internal operations that preserve the invariants by
  /// construction and for negative-control fixtures.
  static SpectralField unchecked(const SpectralGrid& grid, ModeCoefficients coeffs);

  const SpectralGrid& grid() const { return grid_; }
  std::span<const Complex> c1() const { return coeffs_.c1; }
  std::span<const Complex> c2() const { return coeffs_.c2; }
  const ModeCoefficients& coefficients() const { return coeffs_; }
  std::size_t size() const { return coeffs_.c1.size(); }

  SpectralField operator+(const SpectralField& other) const;
  SpectralField operator-(const SpectralField& other) const;
  SpectralField operator*(double scale) const;
  friend SpectralField operator*(double scale, const SpectralField& f) { return f * scale; }
  /// this + alpha * other
  SpectralField axpy(double alpha, const SpectralField& other) const;

  bool operator==(const SpectralField& other) const = default;

 private:
  SpectralField(SpectralGrid grid, ModeCoefficients coeffs);

  SpectralGrid grid_;
  ModeCoefficients coeffs_;
};

/// Scalar spectral field (vorticity).
struct ScalarField {
  SpectralGrid grid;
  std::vector<Complex> coeffs;
};

struct NormBundle {
  double h_norm = 0.0;    ///< |u|, L2
  double v_norm = 0.0;    ///< ||u||, L2 norm of the gradient
  double l4_norm = 0.0;   ///< ||u||_{L4}
};

struct DivergenceDefect {
  double relative = 0.0;  ///< max_k |k.u_k| / max_k |u_k|
  Wavenumber worst_mode;
};

struct SymmetryDefect {
  double relative = 0.0;  ///< max_k |u_{-k} - conj(u_k)| / max_k |u_k|
  Wavenumber worst_mode;
};

DivergenceDefect divergence_defect(const SpectralField& u);
DivergenceDefect divergence_defect(const SpectralGrid& grid, const ModeCoefficients& raw);
SymmetryDefect symmetry_defect(const SpectralGrid& grid, const ModeCoefficients& raw);

/// Helmholtz-Leray projection, P_k = I - k k^T / |k|^2 per mode.
/// Throws FieldError when the input lacks conjugate symmetry.
SpectralField project_leray(const SpectralGrid& grid, const ModeCoefficients& raw);

/// Stokes operator A: multiplication by |k|^2.
SpectralField apply_stokes(const SpectralField& u);

/// B(u, v) = P_H((u.grad) v), pseudo-spectral with 2/3-rule dealiasing.
/// Throws ConfigError when the grid cannot dealias.
SpectralField bilinear_B(const SpectralField& u, const SpectralField& v);

/// Transpose of w -> B(w, v) with respect to the H inner product:
/// returns P_H((grad v)^T y), i.e. (B(w, v), y) = (w, result) for all solenoidal w.
SpectralField bilinear_B_first_transpose(const SpectralField& v, const SpectralField& y);

/// b(u, v, w) = sum_ij int u_i d_i v_j w_j dx.
double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w);

/// Vorticity w_k = i (k1 u_{k,2} - k2 u_{k,1}).
ScalarField curl2d(const SpectralField& u);

/// H inner product (u, v) = int u.v dx.
double inner(const SpectralField& u, const SpectralField& v);
double h_norm_sq(const SpectralField& u);
double v_norm_sq(const SpectralField& u);
double scalar_l2_norm(const ScalarField& w);

NormBundle norms(const SpectralField& u);

/// Physical-space samples of a field on an M x M grid, row-major [j1 * M + j2] at
/// x = 2 pi (j1, j2) / M. M defaults to the grid resolution.
struct PhysicalVelocity {
  int points = 0;
  std::vector<double> u1;
  std::vector<double> u2;
};
PhysicalVelocity to_physical(const SpectralField& u, int points = 0);

}  // namespace snse
