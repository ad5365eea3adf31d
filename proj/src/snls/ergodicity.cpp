#include "snls/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snls/diagnostics.hpp"
#include "snls/errors.hpp"

namespace snls {

double Functional::operator()(const ObservableSample& s) const {
  switch (kind) {
    case Kind::one: return 1.0;
    case Kind::tanh_v_norm_sq: return std::tanh(s.v_norm_sq);
    case Kind::min_mass_1: return std::min(s.mass, 1.0);
    case Kind::v_norm_above: return std::sqrt(s.v_norm_sq) > radius ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::one: return "one";
    case Kind::tanh_v_norm_sq: return "tanh_v_norm_sq";
    case Kind::min_mass_1: return "min_mass_1";
    case Kind::v_norm_above: {
      std::ostringstream os;
      os << "v_norm_above:" << radius;
      return os.str();
    }
  }
  return "?";
}

Functional Functional::parse(const std::string& text) {
  Functional f;
  if (text == "one") {
    f.kind = Kind::one;
  } else if (text == "tanh_v_norm_sq") {
    f.kind = Kind::tanh_v_norm_sq;
  } else if (text == "min_mass_1") {
    f.kind = Kind::min_mass_1;
  } else if (text.rfind("v_norm_above:", 0) == 0) {
    f.kind = Kind::v_norm_above;
    try {
      f.radius = std::stod(text.substr(13));
    } catch (const std::exception&) {
      throw ConfigError("bad radius in functional '" + text + "'");
    }
  } else {
    throw ConfigError("unknown functional '" + text + "'");
  }
  return f;
}

namespace {

// Trapezoid integral of y over [a, b], linear interpolation at the ends.
double integrate(const std::vector<double>& t, const std::vector<double>& y, double a, double b) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double lo = std::max(a, t[i - 1]), hi = std::min(b, t[i]);
    if (hi <= lo) continue;
    const double h = t[i] - t[i - 1];
    auto at = [&](double x) { return y[i - 1] + (y[i] - y[i - 1]) * (x - t[i - 1]) / h; };
    acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return acc;
}

}  // namespace

TimeAverageReport time_average(const std::vector<ObservableSample>& samples, const Functional& phi,
                               double burn_in, const std::string& tag) {
  if (samples.empty()) throw ShapeError("time_average: empty trajectory");
  TimeAverageReport r;
  r.observable = phi.name();
  r.burn_in = burn_in;
  r.initial_tag = tag;
  r.t0 = burn_in;
  r.t1 = samples.back().t;
  std::vector<double> t, y;
  for (const auto& s : samples) {
    t.push_back(s.t);
    y.push_back(phi(s));
  }
  if (samples.size() == 1 || !(r.t1 > r.t0)) {
    if (!(burn_in < r.t1) && samples.size() > 1)
      throw ConfigError("time_average: burn_in must be below the final time");
    r.value = y.back();
    for (double& q : r.quarters) q = r.value;
    return r;
  }
  const double w = r.t1 - r.t0;
  r.value = integrate(t, y, r.t0, r.t1) / w;
  for (int q = 0; q < 4; ++q) {
    const double a = r.t0 + w * q / 4.0, b = r.t0 + w * (q + 1) / 4.0;
    r.quarters[q] = integrate(t, y, a, b) / (b - a);
  }
  return r;
}

TightnessProfile tightness_profile(const std::vector<ObservableSample>& samples,
                                   const std::vector<double>& radii) {
  if (!std::is_sorted(radii.begin(), radii.end()))
    throw ConfigError("tightness radii must be ascending");
  TightnessProfile p;
  p.radii = radii;
  p.fractions.assign(radii.size(), 0.0);
  if (samples.empty()) return p;
  const double total = samples.back().t - samples.front().t;
  if (!(total > 0.0)) {
    const double v = std::sqrt(samples.front().v_norm_sq);
    for (std::size_t j = 0; j < radii.size(); ++j) p.fractions[j] = v > radii[j] ? 1.0 : 0.0;
    return p;
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double h = samples[i].t - samples[i - 1].t;
    const double v = std::sqrt(samples[i - 1].v_norm_sq);
    for (std::size_t j = 0; j < radii.size(); ++j)
      if (v > radii[j]) p.fractions[j] += h;
  }
  for (auto& f : p.fractions) f /= total;
  return p;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ShapeError("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

FingerprintReport invariant_fingerprint(const Model& model, const std::vector<InitialDatum>& data,
                                        const std::vector<Functional>& phis,
                                        double burn_in_fraction, bool common_noise,
                                        const SimulateOptions& opts) {
  if (data.size() < 2) throw ConfigError("fingerprint needs at least two initial data");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw ConfigError("run.burn_in_fraction must lie in [0, 1)");
  const double burn_in = burn_in_fraction * model.config().t_final;

  std::vector<std::vector<ObservableSample>> runs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    SimulateOptions o = opts;
    o.path = common_noise ? opts.path : opts.path + i;
    o.keep_snapshots = false;
    runs.push_back(simulate(model, data[i].u, o).samples);
  }

  FingerprintReport rep;
  for (const auto& phi : phis) {
    rep.phis.push_back(phi.name());
    std::vector<double> values;
    std::vector<std::vector<double>> snaps;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto r = time_average(runs[i], phi, burn_in, data[i].tag);
      rep.rows.push_back({phi.name(), data[i].tag, r.value, r.t0, r.t1});
      values.push_back(r.value);
      std::vector<double> s;
      for (const auto& smp : runs[i])
        if (smp.t >= burn_in) s.push_back(phi(smp));
      snaps.push_back(std::move(s));
    }
    double disc = 0.0, ks = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = i + 1; j < data.size(); ++j) {
        disc = std::max(disc, std::abs(values[i] - values[j]));
        ks = std::max(ks, ks_distance(snaps[i], snaps[j]));
      }
    rep.discrepancy.push_back(disc);
    rep.ks.push_back(ks);
  }
  return rep;
}

DecayFit decay_rate_fit(const std::vector<double>& times, const MomentTrace& mass, double t0,
                        double t1) {
  DecayFit fit;
  std::vector<double> x, y, sy;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0 || times[i] > t1) continue;
    if (!(mass.mean[i] > 0.0)) {
      fit.warning = true;
      fit.message = "non-positive mean mass in the fit window";
      continue;
    }
    x.push_back(times[i]);
    y.push_back(std::log(mass.mean[i]));
    sy.push_back(mass.std_err[i] / mass.mean[i]);
  }
  if (x.size() < 2) {
    fit.warning = true;
    fit.message = "fewer than two usable samples in the fit window";
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.rate = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - my - fit.rate * (x[i] - mx);
    rss += e * e;
  }
  const double se_resid = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  // Samples of one ensemble are correlated in time, so also take the
  // endpoint-difference error as a floor.
  const double se_end =
      std::hypot(sy.front(), sy.back()) / std::max(x.back() - x.front(), 1e-300);
  fit.std_err = std::max(se_resid, se_end);
  fit.ci_low = fit.rate - 1.96 * fit.std_err;
  fit.ci_high = fit.rate + 1.96 * fit.std_err;
  if (!(fit.rate < 0.0)) {
    fit.warning = true;
    if (fit.message.empty()) fit.message = "fitted rate is not negative: no decay";
  }
  return fit;
}

DecayFit decay_rate_fit(const Model& model, const SpectralField& initial, std::size_t n_paths,
                        double t0, double t1, const SimulateOptions& opts) {
  if (model.noise_g().constants().C1 != 0.0)
    throw ConfigError("decay_rate_fit needs C1 = 0 for the state noise");
  const double dt = opts.dt.value_or(model.config().dt);

  SimulateOptions coarse = opts;
  coarse.dt = dt;
  coarse.substeps = 2 * opts.substeps;
  SimulateOptions fine = opts;
  fine.dt = 0.5 * dt;

  const auto ec = simulate_ensemble(model, initial, n_paths, coarse);
  const auto ef = simulate_ensemble(model, initial, n_paths, fine);
  const DecayFit rc = decay_rate_fit(ec.times, ec[Observable::mass], t0, t1);
  const DecayFit rf = decay_rate_fit(ef.times, ef[Observable::mass], t0, t1);

  DecayFit fit;
  fit.rate = 2.0 * rf.rate - rc.rate;
  fit.std_err = 2.0 * rf.std_err + rc.std_err;
  const double half = 1.96 * fit.std_err + std::abs(rc.rate - rf.rate);
  fit.ci_low = fit.rate - half;
  fit.ci_high = fit.rate + half;
  fit.warning = rc.warning || rf.warning || !(fit.rate < 0.0);
  fit.message = !rf.message.empty() ? rf.message : rc.message;
  if (fit.warning && fit.message.empty()) fit.message = "fitted rate is not negative: no decay";
  return fit;
}

}  // namespace snls
