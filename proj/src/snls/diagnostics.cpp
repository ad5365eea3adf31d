#include "snls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snls/errors.hpp"

namespace snls {

std::vector<double> cumulative_trapezoid(const std::vector<double>& t,
                                         const std::vector<double>& y) {
  if (t.size() != y.size()) throw ShapeError("trapezoid: time and value lengths differ");
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

std::vector<double> mass_budget_residual(const TrajectoryRecord& rec, double beta) {
  std::vector<double> t, mass, hs;
  for (const auto& s : rec.samples) {
    t.push_back(s.t);
    mass.push_back(s.mass);
    hs.push_back(s.hs_norm_sq);
  }
  const auto im = cumulative_trapezoid(t, mass);
  const auto ih = cumulative_trapezoid(t, hs);
  std::vector<double> r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    r[i] = mass[i] - mass[0] + 2.0 * beta * im[i] - ih[i];
  return r;
}

MomentTrace mass_budget_ensemble(const Model& model, const SpectralField& initial,
                                 std::size_t n_paths, const SimulateOptions& opts) {
  const std::size_t nt = sample_times(model.config(), opts.dt.value_or(model.config().dt)).size();
  auto stats = run_paths(n_paths, 1, nt, [&](std::size_t path, std::span<double> row) {
    SimulateOptions o = opts;
    o.path = path;
    o.keep_snapshots = false;
    const auto r = mass_budget_residual(simulate(model, initial, o), model.config().beta);
    std::copy(r.begin(), r.end(), row.begin());
  });
  return std::move(stats.series[0]);
}

void check_supermartingale_preconditions(const Model& model, double lambda) {
  const auto& c = model.noise_g().constants();
  if (c.C1 != 0.0) {
    std::ostringstream os;
    os << "supermartingale trace needs C1 = 0, got C1 = " << c.C1;
    throw ConfigError(os.str());
  }
  const double beta = model.config().beta;
  if (!(lambda - 2.0 * beta + c.C1t * c.C1t < 0.0)) {
    std::ostringstream os;
    os << "supermartingale trace needs lambda - 2 beta + C1t^2 < 0, got " << lambda << " - "
       << 2.0 * beta << " + " << c.C1t * c.C1t << " = " << lambda - 2.0 * beta + c.C1t * c.C1t;
    throw ConfigError(os.str());
  }
}

SupermartingaleTrace supermartingale_trace(const Model& model, const SpectralField& initial,
                                           std::size_t n_paths, double lambda,
                                           const SimulateOptions& opts) {
  check_supermartingale_preconditions(model, lambda);
  SupermartingaleTrace out;
  out.lambda = lambda;
  out.times = sample_times(model.config(), opts.dt.value_or(model.config().dt));
  const std::size_t nt = out.times.size();
  auto stats = run_paths(n_paths, 2, nt, [&](std::size_t path, std::span<double> row) {
    SimulateOptions o = opts;
    o.path = path;
    o.keep_snapshots = false;
    const auto rec = simulate(model, initial, o);
    for (std::size_t i = 0; i < nt; ++i) {
      row[i] = std::exp(lambda * rec.samples[i].t) * rec.samples[i].mass;
      row[nt + i] = i == 0 ? 0.0 : row[i] - row[i - 1];
    }
  });
  out.mean = stats.series[0].mean;
  out.std_err = stats.series[0].std_err;
  out.step_mean = stats.series[1].mean;
  out.step_std_err = stats.series[1].std_err;
  for (std::size_t i = 1; i < nt; ++i) {
    // With zero spread a strictly positive increment is a violation.
    if (out.step_mean[i] > 3.0 * out.step_std_err[i] &&
        out.step_mean[i] > 1e-14 * std::abs(out.mean[i - 1]))
      out.violations.push_back(i);
  }
  return out;
}

ContractionTrace contraction_diagnostic(const Model& model, const SpectralField& u10,
                                        const SpectralField& u20, const SimulateOptions& opts) {
  const auto& cfg = model.config();
  const double dt = opts.dt.value_or(cfg.dt);
  const Scheme scheme = opts.scheme.value_or(cfg.scheme);
  const std::size_t n = static_cast<std::size_t>(std::llround(cfg.t_final / dt));
  const double alpha = cfg.alpha;
  const double lg = model.noise_g().constants().lipschitz;

  GalerkinState s1{u10, 0.0}, s2{u20, 0.0};
  model.project(s1.u);
  model.project(s2.u);
  Stepper st1(model), st2(model);
  BrownianDriver driver(cfg.seed, opts.path, model.noise_b().count(), model.noise_g().count(),
                        opts.substeps);

  auto psi_of = [&] {
    if (!cfg.nonlinearity_enabled) return lg - 2.0 * cfg.beta;
    const double a = std::pow(model.nonlinearity().sup_norm(s1.u), alpha - 1.0);
    const double b = std::pow(model.nonlinearity().sup_norm(s2.u), alpha - 1.0);
    return 2.0 * (a + b - cfg.beta) + lg;
  };
  auto dist = [&] {
    double d = 0.0;
    for (std::size_t i = 0; i < s1.u.size(); ++i) d += std::norm(s1.u.coeffs[i] - s2.u.coeffs[i]);
    return d;
  };

  ContractionTrace out;
  double integral = 0.0;
  double psi = psi_of();
  auto record = [&](double t) {
    const double d = dist();
    out.times.push_back(t);
    out.psi.push_back(psi);
    out.distance.push_back(d);
    out.d.push_back(std::exp(-integral) * d);
  };
  record(0.0);
  Increments inc;
  for (std::size_t s = 1; s <= n; ++s) {
    driver.next(dt, inc);
    st1.step(s1, inc, scheme, dt);
    st2.step(s2, inc, scheme, dt);
    const double next = psi_of();
    integral += 0.5 * dt * (psi + next);
    psi = next;
    if (s % cfg.snapshot_stride == 0 || s == n) record(static_cast<double>(s) * dt);
  }
  return out;
}

ContractionEnsemble contraction_ensemble(const Model& model, const SpectralField& u10,
                                         const SpectralField& u20, std::size_t n_pairs,
                                         const SimulateOptions& opts) {
  ContractionEnsemble out;
  out.times = sample_times(model.config(), opts.dt.value_or(model.config().dt));
  const std::size_t nt = out.times.size();
  auto stats = run_paths(n_pairs, 1, nt, [&](std::size_t path, std::span<double> row) {
    SimulateOptions o = opts;
    o.path = path;
    const auto tr = contraction_diagnostic(model, u10, u20, o);
    std::copy(tr.d.begin(), tr.d.end(), row.begin());
  });
  out.d = std::move(stats.series[0]);
  out.d0 = out.d.mean[0];
  for (double v : out.d.mean)
    out.max_ratio = std::max(out.max_ratio, out.d0 > 0.0 ? v / out.d0 : 0.0);
  return out;
}

double gronwall_envelope(double mass0, double t, const GConstants& c, double beta) {
  const double k = 2.0 * (c.C1t * c.C1t - beta);
  const double growth = std::abs(k * t) < 1e-12 ? t : std::expm1(k * t) / k;
  return mass0 * std::exp(k * t) + 2.0 * c.C1 * c.C1 * growth;
}

}  // namespace snls
