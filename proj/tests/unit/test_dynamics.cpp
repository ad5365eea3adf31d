#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "snls/dynamics.hpp"
#include "snls/errors.hpp"
#include "snls/harness.hpp"
#include "test_support.hpp"

using namespace snls;
using snls::test::index_of;
using snls::test::random_field;

namespace {

constexpr double kPi = std::numbers::pi;

SdeConfig small_config() {
  SdeConfig c;
  c.domain = DomainKind::torus1d;
  c.modes_per_axis = 8;
  c.alpha = 3.0;
  c.beta = 0.0;
  c.dt = 1e-2;
  c.t_final = 0.5;
  c.seed = 3;
  return c;
}

double max_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.coeffs[i] - b.coeffs[i]));
  return d;
}

}  // namespace

TEST_CASE("drift of zero is zero") {
  SdeConfig c = small_config();
  c.beta = 1.0;
  c.b_profiles = {"0.3"};
  const Model m(c);
  const auto d = drift({m.basis().zero_field(), 0.0}, m);
  for (const auto& z : d.coeffs) CHECK(z == cplx{});
}

TEST_CASE("drift on a single torus mode") {
  SdeConfig c = small_config();
  c.modes_per_axis = 16;
  c.beta = 0.7;
  c.b_profiles = {"0.3", "0.4/(1+lambda)"};
  const Model m(c);
  const auto k = index_of(m.basis(), 3);
  REQUIRE(m.mask()[k] == 1.0);
  REQUIRE(m.smoothed().weights[k] == 1.0);
  GalerkinState s{m.basis().zero_field(), 0.0};
  const cplx chat{0.9, 0.4};
  s.u.coeffs[k] = chat;
  const auto d = drift(s, m);
  // |chat h_3|^2 = |chat|^2 / (2 pi) pointwise
  const double b2 = 0.09 + std::pow(0.4 / 10.0, 2);
  const cplx expect = (-cplx{0, 1} * (9.0 + std::norm(chat) / (2 * kPi)) - 0.7 - 0.5 * b2) * chat;
  CHECK(std::abs(d.coeffs[k] - expect) < 1e-13);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (i != k) CHECK(std::abs(d.coeffs[i]) < 1e-14);
}

TEST_CASE("drift is mass neutral without damping and B") {
  std::mt19937_64 rng(21);
  SdeConfig c = small_config();
  c.domain = DomainKind::dirichlet2d;
  const Model m(c);
  for (int r = 0; r < 20; ++r) {
    GalerkinState s{random_field(m.basis(), rng), 0.0};
    m.project(s.u);
    CHECK(std::abs(inner(s.u, drift(s, m)).real()) <= 1e-10 * h_norm_sq(s.u));
  }
}

TEST_CASE("Brownian driver") {
  SUBCASE("replay is bit identical") {
    BrownianDriver a(5, 2, 3, 2), b(5, 2, 3, 2);
    for (int i = 0; i < 50; ++i) {
      const auto x = a.next(0.01), y = b.next(0.01);
      CHECK(x.dW == y.dW);
      CHECK(x.dWt == y.dWt);
    }
  }
  SUBCASE("substeps sum the fine increments of the same path") {
    BrownianDriver coarse(5, 1, 2, 1, 2), fine(5, 1, 2, 1, 1);
    for (int i = 0; i < 20; ++i) {
      const auto c = coarse.next(0.02);
      const auto f1 = fine.next(0.01), f2 = fine.next(0.01);
      for (std::size_t m = 0; m < 2; ++m) CHECK(c.dW[m] == doctest::Approx(f1.dW[m] + f2.dW[m]).epsilon(1e-15));
      CHECK(c.dWt[0] == doctest::Approx(f1.dWt[0] + f2.dWt[0]).epsilon(1e-15));
    }
  }
  SUBCASE("variance dt and independent streams") {
    BrownianDriver d(9, 0, 1, 1);
    const int n = 200000;
    const double dt = 0.01;
    double sw = 0, sww = 0, swt = 0;
    for (int i = 0; i < n; ++i) {
      const auto x = d.next(dt);
      sw += x.dW[0] * x.dW[0];
      sww += x.dWt[0] * x.dWt[0];
      swt += x.dW[0] * x.dWt[0];
    }
    // standard error of the sample variance is dt sqrt(2/n)
    CHECK(std::abs(sw / n - dt) < 4 * dt * std::sqrt(2.0 / n));
    CHECK(std::abs(sww / n - dt) < 4 * dt * std::sqrt(2.0 / n));
    CHECK(std::abs(swt / n) < 4 * dt / std::sqrt(n));
  }
  SUBCASE("different paths differ") {
    BrownianDriver a(5, 0, 1, 0), b(5, 1, 1, 0);
    CHECK(a.next(0.1).dW != b.next(0.1).dW);
  }
}

TEST_CASE("EM without noise, F and damping is the exact rotation") {
  SdeConfig c = small_config();
  c.nonlinearity_enabled = false;
  const Model m(c);
  std::mt19937_64 rng(22);
  GalerkinState s{random_field(m.basis(), rng), 0.0};
  m.project(s.u);
  const auto u0 = s.u;
  Stepper st(m);
  const Increments inc;
  const int n = 200;
  for (int i = 0; i < n; ++i) st.step_ito_exp_em(s, inc, c.dt);
  CHECK(std::abs(h_norm_sq(s.u) / h_norm_sq(u0) - 1.0) < 1e-13);
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const cplx expect = u0.coeffs[i] * std::polar(1.0, -m.basis().a_eigs()[i] * n * c.dt);
    CHECK(std::abs(s.u.coeffs[i] - expect) < 1e-12);
  }
}

TEST_CASE("EM per-mode second moments follow the linear moment recursion") {
  SdeConfig c = small_config();
  c.nonlinearity_enabled = false;
  c.beta = 0.4;
  c.b_profiles = {"0.6/(1+lambda)"};
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.5";
  c.dt = 1e-2;
  c.t_final = 1.0;
  c.snapshot_stride = 100;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 3);
  const std::size_t paths = 10000;
  const std::size_t n = u0.size();
  // per mode Welford of |u_k(T)|^2
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  SimulateOptions o;
  for (std::size_t p = 0; p < paths; ++p) {
    o.path = p;
    const auto rec = simulate(m, u0, o);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = std::norm(rec.final_state.coeffs[k]);
      const double d = x - mean[k];
      mean[k] += d / (p + 1);
      m2[k] += d * (x - mean[k]);
    }
  }
  const int steps = 100;
  for (std::size_t k = 0; k < n; ++k) {
    if (u0.coeffs[k] == cplx{}) continue;
    const double b = 0.6 / (1.0 + m.basis().a_eigs()[k]);
    // E|u_{j+1}|^2 = ((1 - dt(beta + b^2/2))^2 + (b^2 + gamma^2) dt) E|u_j|^2
    const double r = std::pow(1.0 - c.dt * (c.beta + 0.5 * b * b), 2) + (b * b + 0.25) * c.dt;
    const double expect = std::norm(u0.coeffs[k]) * std::pow(r, steps);
    const double se = std::sqrt(m2[k] / (paths - 1) / paths);
    CHECK_MESSAGE(std::abs(mean[k] - expect) <= 3 * se, "mode " << m.basis().mode(k)[0]);
  }
}

TEST_CASE("weak error of the deterministic mass decay halves with dt") {
  SdeConfig c = small_config();
  c.nonlinearity_enabled = false;
  c.beta = 1.0;
  c.t_final = 1.0;
  c.snapshot_stride = 1000000;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 2);
  std::vector<double> err;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    SimulateOptions o;
    o.dt = dt;
    const auto rec = simulate(m, u0, o);
    err.push_back(std::abs(rec.samples.back().mass - std::exp(-2.0)));
  }
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.3));
  CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("splitting conserves mass per step without damping and G") {
  // The projection after the phase flow only loses the tail beyond the band,
  // which is negligible when the datum sits well inside it.
  SdeConfig c = small_config();
  c.modes_per_axis = 32;
  c.scheme = Scheme::strat_split;
  c.b_profiles = {"0.5", "0.3/(1+lambda)"};
  c.dt = 0.05;
  c.t_final = 5.0;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 2.0, 2);
  const auto rec = simulate(m, u0);
  for (const auto& s : rec.samples) CHECK(std::abs(s.mass / rec.samples[0].mass - 1.0) < 1e-12);
}

TEST_CASE("splitting damps a single mode exactly") {
  SdeConfig c = small_config();
  c.scheme = Scheme::strat_split;
  c.beta = 0.8;
  c.dt = 0.01;
  c.t_final = 1.0;
  c.snapshot_stride = 10;
  const Model m(c);
  SpectralField u0 = m.basis().zero_field();
  u0.coeffs[index_of(m.basis(), 2)] = {1.5, 0.5};
  const auto rec = simulate(m, u0);
  for (const auto& s : rec.samples)
    CHECK(s.mass == doctest::Approx(h_norm_sq(u0) * std::exp(-2 * 0.8 * s.t)).epsilon(1e-12));
}

TEST_CASE("simulate bookkeeping") {
  SdeConfig c = small_config();
  c.beta = 0.5;
  c.b_profiles = {"0.3"};
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.2";
  c.snapshot_stride = 5;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 2);

  SUBCASE("t_final = 0 records only the initial observables") {
    SdeConfig z = c;
    z.t_final = 0.0;
    const Model mz(z);
    const auto rec = simulate(mz, u0);
    REQUIRE(rec.samples.size() == 1);
    CHECK(rec.samples[0].t == 0.0);
    CHECK(rec.samples[0].mass == doctest::Approx(1.0));
  }

  SUBCASE("sample times") {
    const auto rec = simulate(m, u0);
    REQUIRE(rec.samples.size() == 11);  // 50 steps, stride 5
    CHECK(rec.samples.back().t == doctest::Approx(0.5));
  }

  SUBCASE("replay is bit identical and stride does not perturb the path") {
    const auto a = simulate(m, u0);
    const auto b = simulate(m, u0);
    CHECK(max_diff(a.final_state, b.final_state) == 0.0);
    SdeConfig c1 = c;
    c1.snapshot_stride = 1;
    const auto d = simulate(Model(c1), u0);
    CHECK(max_diff(a.final_state, d.final_state) == 0.0);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].mass == d.samples[5 * i].mass);
  }

  SUBCASE("support stays inside the projector range") {
    SdeConfig lc = c;
    lc.modes_per_axis = 16;
    lc.galerkin_level = 3;
    const Model ml(lc);
    std::mt19937_64 rng(23);
    const auto u = random_field(ml.basis(), rng);
    SimulateOptions o;
    o.keep_snapshots = true;
    for (auto scheme : {Scheme::ito_exp_em, Scheme::strat_split}) {
      o.scheme = scheme;
      const auto rec = simulate(ml, u, o);
      CHECK(rec.initial_projected);
      for (const auto& snap : rec.snapshots)
        for (std::size_t i = 0; i < snap.size(); ++i)
          if (ml.mask()[i] == 0.0) CHECK(snap.coeffs[i] == cplx{});
    }
  }

  SUBCASE("blow-up guard") {
    SpectralField big = u0;
    for (auto& z : big.coeffs) z *= 1e9;
    CHECK_THROWS_AS(simulate(m, big), BlowUpError);
  }
}

TEST_CASE("ensembles") {
  SdeConfig c = small_config();
  c.beta = 0.5;
  c.g_variant = GVariant::linear_diagonal;
  c.g_params = "gamma=0.3,0.4";
  c.snapshot_stride = 10;
  const Model m(c);
  const auto u0 = make_initial(m.basis(), 1.0, 2);

  SUBCASE("one path is the trajectory itself") {
    const auto e = simulate_ensemble(m, u0, 1);
    const auto rec = simulate(m, u0);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
      CHECK(e[Observable::mass].mean[i] == rec.samples[i].mass);
      CHECK(e[Observable::energy].mean[i] == rec.samples[i].energy);
      CHECK(e[Observable::mass].var[i] == 0.0);
    }
  }

  SUBCASE("zero noise has zero variance") {
    SdeConfig q = c;
    q.g_variant = GVariant::none;
    q.g_params.clear();
    const auto e = simulate_ensemble(Model(q), u0, 40);
    for (const auto& tr : e.observables)
      for (double v : tr.var) CHECK(v <= 1e-28);
  }

  SUBCASE("mass identity with scalar gammas") {
    const auto e = simulate_ensemble(m, u0, 4000);
    const auto& mass = e[Observable::mass];
    for (std::size_t i = 0; i < e.times.size(); ++i) {
      const double expect = std::exp((0.25 - 1.0) * e.times[i]);
      CHECK(std::abs(mass.mean[i] - expect) <= 3 * mass.std_err[i] + 1e-12);
    }
  }

  SUBCASE("reduction does not depend on the worker count") {
    auto fn = [](std::size_t p, std::span<double> out) {
      for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::sin(0.1 * p + t) * (p % 7);
    };
    const auto a = run_paths(1000, 1, 5, fn, 1);
    const auto b = run_paths(1000, 1, 5, fn, 4);
    CHECK(a.series[0].mean == b.series[0].mean);
    CHECK(a.series[0].var == b.series[0].var);
  }

  CHECK_THROWS_AS(simulate_ensemble(m, u0, 0), ConfigError);
}

TEST_CASE("configuration validation") {
  SdeConfig c = small_config();
  c.alpha = 0.5;
  CHECK_THROWS_WITH_AS(Model{c}, "alpha must exceed 1", ConfigError);
  c = small_config();
  c.dt = 0.0;
  CHECK_THROWS_AS(Model{c}, ConfigError);
  c = small_config();
  c.b_profiles = {"banana"};
  CHECK_THROWS_AS(Model{c}, ConfigError);
  CHECK(parse_scheme("strat_split") == Scheme::strat_split);
  CHECK_THROWS_AS(parse_scheme("milstein"), ConfigError);
}
