#include "snse/grid.hpp"

#include <cstdlib>
#include <string>

#include "snse/errors.hpp"

namespace snse {

SpectralGrid::SpectralGrid(int max_wavenumber, int resolution)
    : max_wavenumber_(max_wavenumber), resolution_(resolution) {
  if (max_wavenumber < 1) throw ConfigError("max_wavenumber must be >= 1");
  if (resolution < 2 * (max_wavenumber + 1)) {
    throw ConfigError("resolution " + std::to_string(resolution) + " must be >= 2(K+1) = " +
                      std::to_string(2 * (max_wavenumber + 1)));
  }
}

bool SpectralGrid::contains(Wavenumber k) const {
  return std::abs(k.k1) <= max_wavenumber_ && std::abs(k.k2) <= max_wavenumber_;
}

void SpectralGrid::require_dealiasing() const {
  if (!supports_dealiasing()) {
    throw ConfigError("grid N=" + std::to_string(resolution_) + " cannot dealias K=" +
                      std::to_string(max_wavenumber_) + " products (need N > 3K)");
  }
}

}  // namespace snse
