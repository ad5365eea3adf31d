#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "snls/diagnostics.hpp"
#include "snls/errors.hpp"
#include "snls/harness.hpp"
#include "snls/observables.hpp"
#include "test_support.hpp"

using namespace snls;
using snls::test::index_of;
using snls::test::random_field;

namespace {

constexpr double kPi = std::numbers::pi;

SdeConfig base() {
  SdeConfig c;
  c.domain = DomainKind::torus1d;
  c.modes_per_axis = 8;
  c.alpha = 3.0;
  c.beta = 1.0;
  c.dt = 1e-3;
  c.t_final = 1.0;
  c.snapshot_stride = 20;
  c.seed = 31;
  return c;
}

}  // namespace

TEST_CASE("observe") {
  const EigenBasis b(DomainKind::torus1d, 8);
  const Nonlinearity f(b, 3.0);

  SUBCASE("zero field") {
    const auto s = observe(b.zero_field(), b, f, 0.25);
    CHECK(s.t == 0.25);
    CHECK(s.mass == 0.0);
    CHECK(s.energy == 0.0);
    CHECK(s.v_norm_sq == 0.0);
    CHECK(s.z == 0.0);
    CHECK(s.l_alpha1_norm == 0.0);
    CHECK(s.sup_norm == 0.0);
  }

  SUBCASE("single mode closed form") {
    SpectralField u = b.zero_field();
    u.coeffs[index_of(b, 2)] = 3.0;
    const auto s = observe(u, b, f);
    const double amp = 3.0 / std::sqrt(2 * kPi);  // |u(x)|
    const double l4 = 2 * kPi * std::pow(amp, 4);
    CHECK(s.mass == doctest::Approx(9.0));
    CHECK(s.v_norm_sq == doctest::Approx(9.0 * 5.0));
    CHECK(s.energy == doctest::Approx(0.5 * 36.0 + l4 / 4.0));
    CHECK(s.z == doctest::Approx(s.v_norm_sq + l4 / 2.0));
    CHECK(s.l_alpha1_norm == doctest::Approx(std::pow(l4, 0.25)));
    CHECK(s.sup_norm == doctest::Approx(amp));
  }

  SUBCASE("pure and repeatable") {
    std::mt19937_64 rng(1);
    const auto u = random_field(b, rng);
    const auto a = observe(u, b, f), c = observe(u, b, f);
    CHECK(a.energy == c.energy);
    CHECK(a.z == doctest::Approx(a.mass + 2 * a.energy));
  }
}

TEST_CASE("cumulative trapezoid") {
  const auto r = cumulative_trapezoid({0, 1, 3}, {1, 3, 5});
  CHECK(r == std::vector<double>{0, 2, 10});
  CHECK_THROWS_AS(cumulative_trapezoid({0, 1}, {1}), ShapeError);
}

TEST_CASE("mass budget") {
  SUBCASE("zero noise: residual is O(dt)") {
    SdeConfig c = base();
    c.snapshot_stride = 1;
    const Model m(c);
    const auto rec = simulate(m, make_initial(m.basis(), 1.0, 2));
    double worst = 0.0;
    for (double r : mass_budget_residual(rec, c.beta)) worst = std::max(worst, std::abs(r));
    CHECK(worst < 5 * c.dt);
    c.dt = 5e-4;
    const auto rec2 = simulate(Model(c), make_initial(m.basis(), 1.0, 2));
    double worst2 = 0.0;
    for (double r : mass_budget_residual(rec2, c.beta)) worst2 = std::max(worst2, std::abs(r));
    CHECK(worst / worst2 == doctest::Approx(2.0).epsilon(0.3));
  }

  SUBCASE("conservative splitting: residual below 1e-10") {
    SdeConfig c = base();
    c.modes_per_axis = 32;
    c.beta = 0.0;
    c.scheme = Scheme::strat_split;
    c.b_profiles = {"0.4", "0.2/(1+lambda)"};
    const Model m(c);
    const auto rec = simulate(m, make_initial(m.basis(), 1.0, 2));
    for (double r : mass_budget_residual(rec, 0.0)) CHECK(std::abs(r) <= 1e-10);
  }

  SUBCASE("linear diagonal G: ensemble residual vanishes within 3 SE") {
    SdeConfig c = base();
    c.g_variant = GVariant::linear_diagonal;
    c.g_params = "gamma=0.5,0.5";
    c.b_profiles = {"0.3"};
    c.snapshot_stride = 1;
    c.t_final = 0.5;
    const Model m(c);
    const auto tr = mass_budget_ensemble(m, make_initial(m.basis(), 1.0, 2), 4000);
    for (std::size_t i = 0; i < tr.mean.size(); ++i)
      CHECK(std::abs(tr.mean[i]) <= 3 * tr.std_err[i] + 2 * c.dt);
  }
}

TEST_CASE("supermartingale trace") {
  SdeConfig c = base();
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.5,0.5";
  c.t_final = 1.0;
  c.snapshot_stride = 50;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 2);

  SUBCASE("lambda = 1 follows mass(0) e^{-t/2}") {
    const auto tr = supermartingale_trace(m, u0, 2000, 1.0);
    CHECK(tr.monotone());
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      CHECK(std::abs(tr.mean[i] - std::exp(-0.5 * tr.times[i])) <= 3 * tr.std_err[i] + 1e-3);
  }

  SUBCASE("zero noise is deterministic decay") {
    SdeConfig q = base();
    const Model mq(q);
    const auto tr = supermartingale_trace(mq, u0, 3, 0.5);
    CHECK(tr.monotone());
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      CHECK(tr.mean[i] == doctest::Approx(std::exp(-1.5 * tr.times[i])).epsilon(2e-3));
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_WITH_AS(supermartingale_trace(m, u0, 10, 1.6),
                         doctest::Contains("lambda - 2 beta + C1t^2 < 0"), ConfigError);
    SdeConfig a = base();
    a.g_variant = GVariant::additive;
    a.g_params = "count=2;profile=0.3";
    CHECK_THROWS_WITH_AS(supermartingale_trace(Model(a), u0, 10, 0.5),
                         doctest::Contains("C1 = 0"), ConfigError);
  }
}

TEST_CASE("contraction diagnostic") {
  SdeConfig c = base();
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.5";
  c.t_final = 0.5;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 2);

  SUBCASE("identical data give D = 0") {
    const auto tr = contraction_diagnostic(m, u0, u0);
    for (double d : tr.d) CHECK(d == 0.0);
  }

  SUBCASE("linear flow without noise keeps D constant") {
    SdeConfig q = base();
    q.nonlinearity_enabled = false;
    q.beta = 0.6;
    const Model mq(q);
    std::mt19937_64 rng(3);
    const auto u2 = random_field(mq.basis(), rng);
    const auto tr = contraction_diagnostic(mq, u0, u2);
    // psi = L_G - 2 beta, |u1 - u2|^2 decays like (1 - beta dt)^{2n}
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      CHECK(tr.psi[i] == doctest::Approx(-1.2));
      const double n = tr.times[i] / q.dt;
      const double expect = std::exp(1.2 * tr.times[i]) * std::pow(1 - 0.6 * q.dt, 2 * n);
      CHECK(tr.d[i] / tr.d[0] == doctest::Approx(expect).epsilon(1e-9));
    }
  }

  SUBCASE("nearby data stay contracted on average") {
    SpectralField u2 = u0;
    u2.coeffs[index_of(m.basis(), 1)] += 1e-3;
    const auto e = contraction_ensemble(m, u0, u2, 100);
    CHECK(e.d0 == doctest::Approx(1e-6));
    CHECK(e.max_ratio <= 1.05);
  }
}

TEST_CASE("Gronwall envelope") {
  GConstants g;
  g.C1 = 0.3;
  g.C1t = 0.5;
  // k = 2(0.25 - 1) = -1.5
  const double t = 2.0, k = -1.5;
  const double expect = 2.0 * std::exp(k * t) + 2 * 0.09 * (std::exp(k * t) - 1) / k;
  CHECK(gronwall_envelope(2.0, t, g, 1.0) == doctest::Approx(expect));
  CHECK(gronwall_envelope(2.0, 0.0, g, 1.0) == 2.0);
  // k = 0 limit
  g.C1t = 1.0;
  CHECK(gronwall_envelope(1.0, 3.0, g, 1.0) == doctest::Approx(1.0 + 2 * 0.09 * 3.0));
  // envelope bounds the ensemble mass with additive noise
  SdeConfig c = base();
  c.g_variant = GVariant::additive;
  c.g_params = "count=3;profile=0.4";
  c.snapshot_stride = 100;
  const Model m(c);
  const auto e = simulate_ensemble(m, make_initial(m.basis(), 1.0, 2), 500);
  for (std::size_t i = 0; i < e.times.size(); ++i)
    CHECK(e[Observable::mass].mean[i] <=
          gronwall_envelope(1.0, e.times[i], m.noise_g().constants(), c.beta) +
              3 * e[Observable::mass].std_err[i]);
}
