#include "snls/observables.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace snls {

ObservableSample observe(const SpectralField& u, const EigenBasis& basis, const Nonlinearity& f,
                         double t) {
  basis.check(u);
  ObservableSample s;
  s.t = t;
  double grad = 0.0;
  const auto a = basis.a_eigs();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double c2 = std::norm(u.coeffs[i]);
    s.mass += c2;
    grad += a[i] * c2;
  }
  s.v_norm_sq = s.mass + grad;

  // One synthesis serves both the L^{alpha+1} norm and the sup norm.
  const EigenBasis& g = f.grid_basis();
  std::vector<cplx> grid(g.grid_size());
  g.synthesize(u.coeffs, grid);
  const double p = f.alpha() + 1.0;
  double acc = 0.0, mx = 0.0;
  for (const auto& z : grid) {
    const double r = std::abs(z);
    acc += std::pow(r, p);
    mx = std::max(mx, r);
  }
  const double integral = acc * g.quadrature_weight();
  s.l_alpha1_norm = std::pow(integral, 1.0 / p);
  s.sup_norm = mx;
  const double fhat = integral / p;
  s.energy = 0.5 * grad + fhat;
  s.z = s.mass + 2.0 * s.energy;
  return s;
}

}  // namespace snls
