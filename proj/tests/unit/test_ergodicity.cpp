#include <cmath>
#include <random>

#include "doctest.h"
#include "snls/errors.hpp"
#include "snls/ergodicity.hpp"
#include "snls/harness.hpp"

using namespace snls;

namespace {

std::vector<ObservableSample> constant_run(double mass, double v2, int n, double dt) {
  std::vector<ObservableSample> out;
  for (int i = 0; i <= n; ++i) {
    ObservableSample s;
    s.t = i * dt;
    s.mass = mass;
    s.v_norm_sq = v2;
    out.push_back(s);
  }
  return out;
}

SdeConfig delta0_config() {
  SdeConfig c;
  c.domain = DomainKind::torus1d;
  c.modes_per_axis = 8;
  c.beta = 1.0;
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.5,0.5";
  c.dt = 1e-3;
  c.t_final = 1.0;
  c.snapshot_stride = 50;
  c.seed = 41;
  return c;
}

}  // namespace

TEST_CASE("functionals") {
  ObservableSample s;
  s.mass = 2.5;
  s.v_norm_sq = 4.0;
  CHECK(Functional::parse("one")(s) == 1.0);
  CHECK(Functional::parse("min_mass_1")(s) == 1.0);
  CHECK(Functional::parse("tanh_v_norm_sq")(s) == doctest::Approx(std::tanh(4.0)));
  CHECK(Functional::parse("v_norm_above:1.5")(s) == 1.0);
  CHECK(Functional::parse("v_norm_above:2")(s) == 0.0);
  CHECK(Functional::parse("v_norm_above:1.5").name() == "v_norm_above:1.5");
  CHECK_THROWS_AS(Functional::parse("mass_squared"), ConfigError);
  CHECK_THROWS_AS(Functional::parse("v_norm_above:x"), ConfigError);
}

TEST_CASE("time averages") {
  SUBCASE("constant trajectory averages to phi(u0)") {
    const auto run = constant_run(0.4, 1.0, 100, 0.1);
    const auto r = time_average(run, Functional::parse("min_mass_1"), 2.0, "a");
    CHECK(r.value == doctest::Approx(0.4));
    CHECK(r.t0 == 2.0);
    CHECK(r.t1 == doctest::Approx(10.0));
    CHECK(r.initial_tag == "a");
    for (double q : r.quarters) CHECK(q == doctest::Approx(0.4));
    CHECK(time_average(run, Functional::parse("one"), 0.0).value == doctest::Approx(1.0));
  }

  SUBCASE("linear ramp has the exact window mean and quartiles") {
    std::vector<ObservableSample> run;
    for (int i = 0; i <= 40; ++i) {
      ObservableSample s;
      s.t = 0.25 * i;
      s.mass = 0.1 * s.t;  // below 1 so min(mass, 1) = mass
      run.push_back(s);
    }
    const auto r = time_average(run, Functional::parse("min_mass_1"), 2.0);
    CHECK(r.value == doctest::Approx(0.1 * 6.0));
    CHECK(r.quarters[0] == doctest::Approx(0.1 * 3.0));
    CHECK(r.quarters[3] == doctest::Approx(0.1 * 9.0));
  }

  SUBCASE("average lies in the hull of observed values") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<ObservableSample> run;
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i <= 200; ++i) {
      ObservableSample s;
      s.t = 0.01 * i;
      s.v_norm_sq = u(rng);
      const double y = std::tanh(s.v_norm_sq);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
      run.push_back(s);
    }
    const auto r = time_average(run, Functional::parse("tanh_v_norm_sq"), 0.5);
    CHECK(r.value >= lo);
    CHECK(r.value <= hi);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(time_average({}, Functional::parse("one"), 0.0), ShapeError);
    const auto run = constant_run(1.0, 1.0, 10, 0.1);
    CHECK_THROWS_AS(time_average(run, Functional::parse("one"), 5.0), ConfigError);
  }

  SUBCASE("min(mass, 1) quartiles decrease in the decaying regime") {
    SdeConfig c = delta0_config();
    c.t_final = 8.0;
    const Model m(c);
    const auto rec = simulate(m, make_initial(m.basis(), 4.0, 2));
    const auto r = time_average(rec.samples, Functional::parse("min_mass_1"), 1.0);
    for (int q = 1; q < 4; ++q) CHECK(r.quarters[q] < r.quarters[q - 1]);
  }
}

TEST_CASE("tightness profile") {
  std::vector<ObservableSample> run;
  for (int i = 0; i <= 10; ++i) {
    ObservableSample s;
    s.t = i;
    s.v_norm_sq = i < 5 ? 9.0 : 0.25;  // |u|_V = 3 then 0.5
    run.push_back(s);
  }
  const auto p = tightness_profile(run, {0.0, 0.4, 1.0, 2.5, 1e9});
  CHECK(p.fractions[0] == doctest::Approx(1.0));
  CHECK(p.fractions[1] == doctest::Approx(1.0));
  CHECK(p.fractions[2] == doctest::Approx(0.5));
  CHECK(p.fractions[3] == doctest::Approx(0.5));
  CHECK(p.fractions[4] == 0.0);
  for (std::size_t i = 1; i < p.fractions.size(); ++i) CHECK(p.fractions[i] <= p.fractions[i - 1]);
  CHECK_THROWS_AS(tightness_profile(run, {2.0, 1.0}), ConfigError);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  CHECK(ks_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_distance({1, 2}, {3, 4}) == 1.0);
  CHECK(ks_distance({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ks_distance({}, {1}), ShapeError);
}

TEST_CASE("invariant fingerprint") {
  SdeConfig c = delta0_config();
  c.t_final = 2.0;
  const Model m(c);
  const auto u = make_initial(m.basis(), 1.0, 2);
  const std::vector<Functional> phis{Functional::parse("min_mass_1"), Functional::parse("tanh_v_norm_sq")};

  SUBCASE("identical data and noise give zero discrepancy") {
    const auto rep = invariant_fingerprint(m, {{"a", u}, {"b", u}}, phis, 0.2, true);
    REQUIRE(rep.rows.size() == 4);
    for (double d : rep.discrepancy) CHECK(d == 0.0);
    for (double d : rep.ks) CHECK(d == 0.0);
    CHECK(rep.rows[0].t0 == doctest::Approx(0.4));
    CHECK(rep.rows[0].t1 == doctest::Approx(2.0));
  }

  SUBCASE("independent noise gives a positive discrepancy") {
    const auto rep = invariant_fingerprint(m, {{"a", u}, {"b", u}}, phis, 0.2, false);
    CHECK(rep.discrepancy[0] > 0.0);
  }

  CHECK_THROWS_AS(invariant_fingerprint(m, {{"a", u}}, phis, 0.2), ConfigError);
  CHECK_THROWS_AS(invariant_fingerprint(m, {{"a", u}, {"b", u}}, phis, 1.0), ConfigError);
}

TEST_CASE("decay rate fit") {
  SUBCASE("zero noise gives -2 beta") {
    SdeConfig c = delta0_config();
    c.g_variant = GVariant::none;
    c.g_params.clear();
    const Model m(c);
    const auto fit = decay_rate_fit(m, make_initial(m.basis(), 1.0, 2), 2, 0.2, 1.0);
    CHECK(fit.rate == doctest::Approx(-2.0).epsilon(5e-4));
    CHECK_FALSE(fit.warning);
  }

  SUBCASE("scalar gammas give sum gamma^2 - 2 beta inside the interval") {
    const Model m(delta0_config());
    const auto fit = decay_rate_fit(m, make_initial(m.basis(), 1.0, 2), 1000, 0.2, 1.0);
    CHECK(fit.ci_low <= -1.5);
    CHECK(fit.ci_high >= -1.5);
  }

  SUBCASE("critical damping: rate near 0 within the interval") {
    SdeConfig c = delta0_config();
    c.beta = 0.25;
    const Model m(c);
    const auto fit = decay_rate_fit(m, make_initial(m.basis(), 1.0, 2), 1000, 0.2, 1.0);
    CHECK(fit.ci_low <= 0.0);
    CHECK(fit.ci_high >= 0.0);
  }

  SUBCASE("growth is reported with a warning, not an exception") {
    MomentTrace tr;
    std::vector<double> t;
    for (int i = 0; i <= 10; ++i) {
      t.push_back(0.1 * i);
      tr.mean.push_back(std::exp(0.3 * t.back()));
      tr.std_err.push_back(0.0);
    }
    const auto fit = decay_rate_fit(t, tr, 0.0, 1.0);
    CHECK(fit.rate == doctest::Approx(0.3));
    CHECK(fit.warning);
    CHECK_FALSE(fit.message.empty());
  }

  SUBCASE("needs C1 = 0") {
    SdeConfig c = delta0_config();
    c.g_variant = GVariant::additive;
    c.g_params = "count=2;profile=0.3";
    const Model m(c);
    CHECK_THROWS_AS(decay_rate_fit(m, make_initial(m.basis(), 1.0, 2), 10, 0.2, 1.0), ConfigError);
  }
}
