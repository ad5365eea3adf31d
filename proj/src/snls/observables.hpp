#pragma once

#include "snls/operators.hpp"
#include "snls/spectral_domain.hpp"

namespace snls {

// Functionals of one state. energy = 1/2 |A^{1/2}u|^2 + F^(u) and
// z = mass + 2 energy = |u|_V^2 + 2 F^(u).
struct ObservableSample {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double v_norm_sq = 0.0;
  double z = 0.0;
  double l_alpha1_norm = 0.0;
  // sum_m |S_n G(S_n u) e_m|_H^2 at this state (0 when not evaluated).
  double hs_norm_sq = 0.0;
  // max |u| over the nonlinearity grid.
  double sup_norm = 0.0;
};

ObservableSample observe(const SpectralField& u, const EigenBasis& basis, const Nonlinearity& f,
                         double t = 0.0);

}  // namespace snls
