#pragma once

#include <cstddef>
#include <numbers>

namespace snse {

/// Wavenumber on the 2pi-periodic torus.
struct Wavenumber {
  int k1 = 0;
  int k2 = 0;

  constexpr int norm_sq() const { return k1 * k1 + k2 * k2; }
  constexpr Wavenumber operator-() const { return {-k1, -k2}; }
  friend constexpr bool operator==(Wavenumber, Wavenumber) = default;
};

/// Truncated Fourier box |k|_inf <= K on [0, 2pi)^2 with an N x N collocation grid.
///
/// Coefficients are stored over the full (2K+1)^2 box, both k and -k, with the k = 0 slot
/// held at zero (mean-zero fields). The box is closed under k -> -k.
class SpectralGrid {
 public:
  static constexpr double kPeriod = 2.0 * std::numbers::pi;
  static constexpr double kArea = kPeriod * kPeriod;

  /// Throws ConfigError unless K >= 1 and N >= 2(K+1).
  SpectralGrid(int max_wavenumber, int resolution);

  int max_wavenumber() const { return max_wavenumber_; }
  int resolution() const { return resolution_; }
  int side() const { return 2 * max_wavenumber_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side()) * side(); }

  std::size_t index(Wavenumber k) const {
    return static_cast<std::size_t>(k.k1 + max_wavenumber_) * side() + (k.k2 + max_wavenumber_);
  }
  Wavenumber wavenumber(std::size_t idx) const {
    const int s = side();
    return {static_cast<int>(idx) / s - max_wavenumber_, static_cast<int>(idx) % s - max_wavenumber_};
  }
  std::size_t mirror(std::size_t idx) const { return size() - 1 - idx; }
  std::size_t zero_index() const { return size() / 2; }
  bool contains(Wavenumber k) const;

  /// 2/3-rule dealiasing is exact when N > 3K.
  bool supports_dealiasing() const { return resolution_ > 3 * max_wavenumber_; }
  /// Throws ConfigError when nonlinear products cannot be formed without aliasing.
  void require_dealiasing() const;

  friend bool operator==(const SpectralGrid&, const SpectralGrid&) = default;

 private:
  int max_wavenumber_;
  int resolution_;
};

}  // namespace snse
