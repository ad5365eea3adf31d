#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "snls/errors.hpp"
#include "snls/spectral_domain.hpp"
#include "test_support.hpp"

using namespace snls;
using snls::test::index_of;
using snls::test::random_field;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr DomainKind kAllKinds[] = {DomainKind::torus1d,     DomainKind::torus2d,
                                    DomainKind::dirichlet1d, DomainKind::dirichlet2d,
                                    DomainKind::neumann1d,   DomainKind::neumann2d};
}  // namespace

TEST_CASE("constant field on torus1d analyzes to c sqrt(2 pi) at k=0") {
  const EigenBasis b(DomainKind::torus1d, 16);
  const cplx c{0.75, -1.5};
  std::vector<cplx> grid(b.grid_size(), c);
  const auto u = b.to_spectral(grid);
  const std::size_t k0 = index_of(b, 0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx expect = i == k0 ? c * std::sqrt(2.0 * kPi) : cplx{};
    CHECK(std::abs(u.coeffs[i] - expect) < 1e-13);
  }
}

TEST_CASE("single torus mode synthesizes e^{ix}/sqrt(2 pi)") {
  const EigenBasis b(DomainKind::torus1d, 8);
  SpectralField u = b.zero_field();
  u.coeffs[index_of(b, 1)] = 1.0;
  const auto g = b.from_spectral(u);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = b.grid_point(j)[0];
    CHECK(std::abs(g[j] - std::polar(1.0 / std::sqrt(2.0 * kPi), x)) < 1e-14);
  }
}

TEST_CASE("zero coefficients synthesize the zero field") {
  for (auto kind : kAllKinds) {
    const EigenBasis b(kind, 8);
    for (const auto& z : b.from_spectral(b.zero_field())) CHECK(z == cplx{});
  }
}

TEST_CASE("dirichlet and neumann eigenfunctions are the normalized sine and cosine") {
  const EigenBasis d(DomainKind::dirichlet1d, 8);
  SpectralField u = d.zero_field();
  u.coeffs[index_of(d, 3)] = 1.0;
  auto g = d.from_spectral(u);
  for (std::size_t j = 0; j < g.size(); ++j)
    CHECK(std::abs(g[j] - std::sqrt(2.0 / kPi) * std::sin(3.0 * d.grid_point(j)[0])) < 1e-14);

  const EigenBasis n(DomainKind::neumann1d, 8);
  u = n.zero_field();
  u.coeffs[index_of(n, 0)] = 1.0;
  u.coeffs[index_of(n, 2)] = 1.0;
  g = n.from_spectral(u);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = n.grid_point(j)[0];
    CHECK(std::abs(g[j] - (1.0 / std::sqrt(kPi) + std::sqrt(2.0 / kPi) * std::cos(2.0 * x))) <
          1e-14);
  }
}

TEST_CASE("eigenvalues follow the documented conventions") {
  const EigenBasis t(DomainKind::torus2d, 8);
  const auto i = index_of(t, -3, 2);
  CHECK(t.a_eigs()[i] == 13.0);
  CHECK(t.s_eigs()[i] == 14.0);
  const EigenBasis d(DomainKind::dirichlet2d, 4);
  CHECK(d.s_eigs()[index_of(d, 1, 1)] == 2.0);
  const EigenBasis n(DomainKind::neumann1d, 4);
  CHECK(n.a_eigs()[index_of(n, 0)] == 0.0);
  CHECK(n.s_eigs()[index_of(n, 0)] == 1.0);
  CHECK(t.size() == 64);
  CHECK(d.size() == 16);
}

TEST_CASE("analysis inverts synthesis on every basis kind") {
  std::mt19937_64 rng(1);
  for (auto kind : kAllKinds) {
    const EigenBasis b(kind, 8, 3);
    const auto u = random_field(b, rng);
    const auto v = b.to_spectral(b.from_spectral(u));
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u.coeffs[i] - v.coeffs[i]));
    CHECK_MESSAGE(err < 1e-13, to_string(kind));
  }
}

TEST_CASE("Parseval: grid quadrature of |u|^2 equals the coefficient sum") {
  std::mt19937_64 rng(2);
  for (auto kind : kAllKinds) {
    const EigenBasis b(kind, 8);
    const auto u = random_field(b, rng);
    double grid_sum = 0.0;
    for (const auto& z : b.from_spectral(u)) grid_sum += std::norm(z);
    grid_sum *= b.quadrature_weight();
    CHECK(grid_sum == doctest::Approx(h_norm_sq(u)).epsilon(1e-12));
    CHECK(lp_norm(u, b, 2.0) == doctest::Approx(std::sqrt(h_norm_sq(u))).epsilon(1e-12));
  }
}

TEST_CASE("grid size mismatch raises ShapeError") {
  const EigenBasis b(DomainKind::torus1d, 8);
  std::vector<cplx> grid(b.grid_size() + 1);
  CHECK_THROWS_AS(b.to_spectral(grid), ShapeError);
  const EigenBasis other(DomainKind::torus1d, 16);
  CHECK_THROWS_AS(b.from_spectral(other.zero_field()), ShapeError);
}

TEST_CASE("fractional powers") {
  const EigenBasis b(DomainKind::torus1d, 8);
  std::mt19937_64 rng(3);
  const auto u = random_field(b, rng);
  const auto same = apply_frac_power(u, b, Spectrum::A, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(same.coeffs[i] == u.coeffs[i]);

  SpectralField e = b.zero_field();
  e.coeffs[index_of(b, 2)] = {1.0, 1.0};
  const auto h = apply_frac_power(e, b, Spectrum::A, 0.5);
  CHECK(h.coeffs[index_of(b, 2)] == cplx{2.0, 2.0});
  const auto s = apply_frac_power(e, b, Spectrum::S, -1.0);
  CHECK(s.coeffs[index_of(b, 2)] == cplx{0.2, 0.2});
  // zero eigenvalue to a negative power maps the mode to zero
  e.coeffs[index_of(b, 0)] = 3.0;
  CHECK(apply_frac_power(e, b, Spectrum::A, -0.5).coeffs[index_of(b, 0)] == cplx{});
}

TEST_CASE("norms of zero and of a single mode") {
  const EigenBasis b(DomainKind::torus1d, 8);
  const auto z = b.zero_field();
  CHECK(h_norm_sq(z) == 0.0);
  CHECK(v_norm_sq(z, b) == 0.0);
  CHECK(lp_norm(z, b, 4.0) == 0.0);
  CHECK(sup_norm(z, b) == 0.0);

  SpectralField u = b.zero_field();
  u.coeffs[index_of(b, 3)] = 2.0;
  CHECK(h_norm_sq(u) == doctest::Approx(4.0));
  // |u|_V^2 = |u|_H^2 + |A^{1/2}u|_H^2 = 4 + 9*4
  CHECK(v_norm_sq(u, b) == doctest::Approx(40.0));
  // |u| = 2/sqrt(2 pi) everywhere, so |u|_{L^4}^4 = 2 pi (2/sqrt(2 pi))^4
  CHECK(std::pow(lp_norm(u, b, 4.0), 4) == doctest::Approx(2.0 * kPi * 16.0 / (4.0 * kPi * kPi)));
  CHECK(sup_norm(u, b) == doctest::Approx(2.0 / std::sqrt(2.0 * kPi)));
}

TEST_CASE("refined basis shares modes and doubles the grid") {
  const EigenBasis b(DomainKind::dirichlet2d, 6);
  const auto r = b.refined(4);
  CHECK(r.size() == b.size());
  CHECK(r.grid_points_per_axis() == 24);
  CHECK(r.tag() == b.tag());
}

TEST_CASE("invalid basis parameters") {
  CHECK_THROWS_AS(EigenBasis(DomainKind::torus1d, 7), ConfigError);
  CHECK_THROWS_AS(EigenBasis(DomainKind::dirichlet1d, 0), ConfigError);
  CHECK_THROWS_AS(EigenBasis(DomainKind::neumann1d, 8, 1), ConfigError);
  CHECK_THROWS_AS(parse_domain_kind("sphere"), ConfigError);
  CHECK(parse_domain_kind("neumann2d") == DomainKind::neumann2d);
}
