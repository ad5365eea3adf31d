#pragma once

#include <random>

#include "snls/spectral_domain.hpp"

namespace snls::test {

// Coefficients decaying like 1/(1+a_k) with normal real and imaginary parts.
inline SpectralField random_field(const EigenBasis& basis, std::mt19937_64& rng,
                                  double scale = 1.0) {
  std::normal_distribution<double> n;
  SpectralField u = basis.zero_field();
  for (std::size_t i = 0; i < u.size(); ++i)
    u.coeffs[i] = scale * cplx{n(rng), n(rng)} / (1.0 + basis.a_eigs()[i]);
  return u;
}

inline std::size_t index_of(const EigenBasis& b, int k1, int k2 = 0) {
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.mode(i)[0] == k1 && b.mode(i)[1] == k2) return i;
  return b.size();
}

}  // namespace snls::test
