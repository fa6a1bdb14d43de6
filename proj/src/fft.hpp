#pragma once

#include <span>
#include <vector>

#include "snse/field.hpp"

namespace snse::detail {

/// Scatters box coefficients (mode k at [(k1 mod M), (k2 mod M)]) into an M x M array and
/// evaluates sum_k c_k exp(i k.x) at the collocation points. Requires M > 2K.
void synthesize(const SpectralGrid& grid, std::span<const Complex> box, int points,
                std::vector<Complex>& physical);

/// Inverse of synthesize for band-limited data: discrete Fourier coefficients of the
/// M x M samples, gathered back onto the |k|_inf <= K box (k = 0 included).
void analyze(const SpectralGrid& grid, std::span<const Complex> physical, int points,
             std::vector<Complex>& box);

/// Splits the transform F of (a + i b), a and b real, into a_k and b_k.
void split_real_pair(const SpectralGrid& grid, std::span<const Complex> packed,
                     std::vector<Complex>& a, std::vector<Complex>& b);

}  // namespace snse::detail
