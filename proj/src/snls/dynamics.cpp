#include "snls/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "snls/errors.hpp"

namespace snls {

namespace {

constexpr cplx kI{0.0, 1.0};

std::size_t step_count(double t_final, double dt) {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                    stream};
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view to_string(Scheme s) {
  return s == Scheme::ito_exp_em ? "ito_exp_em" : "strat_split";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "ito_exp_em") return Scheme::ito_exp_em;
  if (name == "strat_split") return Scheme::strat_split;
  throw ConfigError("scheme must be ito_exp_em or strat_split, got '" + std::string(name) + "'");
}

void SdeConfig::validate() const {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("alpha must exceed 1");
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be non-negative");
  if (t_final > 0.0 && dt > t_final) throw ConfigError("dt must not exceed t_final");
  if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be at least 1");
  if (paths < 1) throw ConfigError("ensemble.paths must be at least 1");
  if (modes_per_axis < 1) throw ConfigError("domain.modes_per_axis must be at least 1");
  if (oversample < 2) throw ConfigError("domain.oversample must be at least 2");
}

int full_resolution_level(const EigenBasis& basis) {
  const auto s = basis.s_eigs();
  const double mx = s.empty() ? 1.0 : *std::max_element(s.begin(), s.end());
  int n = 0;
  while (std::ldexp(1.0, n) <= mx) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(const SdeConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      basis_(cfg.domain, cfg.modes_per_axis, cfg.oversample),
      f_(basis_, cfg.alpha) {
  g_ = StateNoiseG::make(cfg.g_variant, cfg.g_params, basis_, cfg.alpha);
  build();
}

Model::Model(const SdeConfig& cfg, StateNoiseG g)
    : cfg_((cfg.validate(), cfg)),
      basis_(cfg.domain, cfg.modes_per_axis, cfg.oversample),
      f_(basis_, cfg.alpha),
      g_(std::move(g)) {
  build();
}

void Model::build() {
  level_ = cfg_.galerkin_level < 0 ? full_resolution_level(basis_) : cfg_.galerkin_level;
  mask_ = sharp_projector(level_, basis_);
  smoothed_ = smoothed_projector(level_, basis_);
  std::vector<Profile> profiles;
  for (const auto& p : cfg_.b_profiles) profiles.push_back(Profile::parse(p));
  b_ = make_linear_noise(basis_, profiles);
  correction_ = stratonovich_correction(b_, std::span<const double>(smoothed_.weights));
  for (const auto& sym : b_.multipliers) {
    std::vector<double> row(sym.size());
    for (std::size_t k = 0; k < sym.size(); ++k)
      row[k] = smoothed_.weights[k] * smoothed_.weights[k] * sym[k];
    sbs_.push_back(std::move(row));
  }
}

bool Model::project(SpectralField& u) const {
  basis_.check(u);
  bool changed = false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (mask_[i] == 0.0 && u.coeffs[i] != cplx{}) {
      changed = true;
      u.coeffs[i] = cplx{};
    }
  }
  return changed;
}

bool Model::in_range(const SpectralField& u) const {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (mask_[i] == 0.0 && u.coeffs[i] != cplx{}) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Brownian driver

BrownianDriver::BrownianDriver(std::uint64_t seed, std::uint64_t path, std::size_t b_count,
                               std::size_t g_count, int substeps)
    : b_count_(b_count),
      g_count_(g_count),
      substeps_(substeps),
      w_rng_(make_stream(seed, path, 0x57u)),
      wt_rng_(make_stream(seed, path, 0xa7u)) {
  if (substeps < 1) throw ConfigError("driver substeps must be at least 1");
}

void BrownianDriver::next(double dt, Increments& inc) {
  inc.dW.assign(b_count_, 0.0);
  inc.dWt.assign(g_count_, 0.0);
  const double sd = std::sqrt(dt / substeps_);
  for (int s = 0; s < substeps_; ++s) {
    for (auto& w : inc.dW) w += sd * w_normal_(w_rng_);
    for (auto& w : inc.dWt) w += sd * wt_normal_(wt_rng_);
  }
}

Increments BrownianDriver::next(double dt) {
  Increments inc;
  next(dt, inc);
  return inc;
}

// ---------------------------------------------------------------------------
// Drift and steppers

SpectralField drift(const GalerkinState& state, const Model& model) {
  const auto& basis = model.basis();
  basis.check(state.u);
  const auto a = basis.a_eigs();
  const auto mask = model.mask();
  const auto corr = model.correction();
  const double beta = model.config().beta;
  SpectralField fu = basis.zero_field();
  if (model.config().nonlinearity_enabled) fu = model.nonlinearity().apply(state.u);
  SpectralField out = basis.zero_field();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cplx u = state.u.coeffs[i];
    out.coeffs[i] = (-kI * a[i] * u - kI * fu.coeffs[i] - beta * u + corr[i] * u) * mask[i];
  }
  return out;
}

Stepper::Stepper(const Model& model) : model_(model) {
  const std::size_t n = model.basis().size();
  rotation_.resize(n);
  work_.resize(n);
  fu_.resize(n);
  su_.resize(n);
  grid_nl_.resize(model.nonlinearity().grid_basis().grid_size());
  grid_a_.resize(model.basis().grid_size());
  grid_b_.resize(model.basis().grid_size());
}

void Stepper::set_dt(double dt) {
  if (dt == dt_) return;
  dt_ = dt;
  const auto a = model_.basis().a_eigs();
  for (std::size_t i = 0; i < rotation_.size(); ++i) rotation_[i] = std::polar(1.0, -a[i] * dt);
}

double Stepper::add_g_noise(std::span<const cplx> u, std::span<const double> dwt,
                            std::span<cplx> out) {
  const auto& w = model_.smoothed().weights;
  for (std::size_t i = 0; i < u.size(); ++i) su_[i] = w[i] * u[i];
  model_.noise_g().apply(su_, g_out_, model_.basis(), grid_a_, grid_b_);
  double hs = 0.0;
  for (std::size_t m = 0; m < g_out_.size(); ++m) {
    const auto& g = g_out_[m];
    for (std::size_t i = 0; i < u.size(); ++i) {
      const cplx sg = w[i] * g[i];
      hs += std::norm(sg);
      if (!dwt.empty()) out[i] += -kI * dwt[m] * sg;
    }
  }
  return hs;
}

double Stepper::hs_norm_sq(const SpectralField& u) {
  if (model_.noise_g().count() == 0) return 0.0;
  return add_g_noise(u.coeffs, {}, work_);
}

void Stepper::guard(const GalerkinState& state) const {
  double v = 0.0;
  const auto a = model_.basis().a_eigs();
  for (std::size_t i = 0; i < state.u.size(); ++i) v += (1.0 + a[i]) * std::norm(state.u.coeffs[i]);
  const double vn = std::sqrt(v);
  if (!std::isfinite(vn) || vn > kBlowUpThreshold) throw BlowUpError(state.t, vn);
}

void Stepper::step(GalerkinState& state, const Increments& inc, Scheme scheme, double dt) {
  if (scheme == Scheme::ito_exp_em)
    step_ito_exp_em(state, inc, dt);
  else
    step_strat_split(state, inc, dt);
}

void Stepper::step_ito_exp_em(GalerkinState& state, const Increments& inc, double dt) {
  set_dt(dt);
  auto& u = state.u.coeffs;
  const std::size_t n = u.size();
  const auto mask = model_.mask();
  const auto corr = model_.correction();
  const double beta = model_.config().beta;
  const auto& sbs = model_.projected_b();

  if (model_.config().nonlinearity_enabled) {
    model_.nonlinearity().apply(u, fu_, grid_nl_);
  } else {
    std::fill(fu_.begin(), fu_.end(), cplx{});
  }
  for (std::size_t i = 0; i < n; ++i)
    work_[i] = u[i] + dt * (-kI * mask[i] * fu_[i] + (corr[i] - beta) * u[i]);
  for (std::size_t m = 0; m < sbs.size(); ++m) {
    const double dw = inc.dW[m];
    for (std::size_t i = 0; i < n; ++i) work_[i] += -kI * (sbs[m][i] * dw) * u[i];
  }
  if (model_.noise_g().count() > 0) add_g_noise(u, inc.dWt, work_);
  for (std::size_t i = 0; i < n; ++i) u[i] = rotation_[i] * work_[i] * mask[i];
  state.t += dt;
  guard(state);
}

void Stepper::step_strat_split(GalerkinState& state, const Increments& inc, double dt) {
  set_dt(dt);
  auto& u = state.u.coeffs;
  const std::size_t n = u.size();
  const auto mask = model_.mask();
  const auto& sbs = model_.projected_b();

  // (1) linear flow
  for (std::size_t i = 0; i < n; ++i) u[i] *= rotation_[i];

  // (2) pointwise phase flow of the nonlinearity, then back into H_n
  if (model_.config().nonlinearity_enabled) {
    const auto& g = model_.nonlinearity().grid_basis();
    g.synthesize(u, grid_nl_);
    const double e = 0.5 * (model_.config().alpha - 1.0);
    if (e == 1.0) {
      for (auto& z : grid_nl_) z *= std::polar(1.0, -std::norm(z) * dt);
    } else {
      for (auto& z : grid_nl_) z *= std::polar(1.0, -std::pow(std::norm(z), e) * dt);
    }
    g.analyze(grid_nl_, u);
    for (std::size_t i = 0; i < n; ++i) u[i] *= mask[i];
  }

  // (3) damping
  const double decay = std::exp(-model_.config().beta * dt);
  for (auto& c : u) c *= decay;

  // (4) Stratonovich B noise: diagonal and commuting, so the flow is exact.
  if (!sbs.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      double phase = 0.0;
      for (std::size_t m = 0; m < sbs.size(); ++m) phase += sbs[m][i] * inc.dW[m];
      u[i] *= std::polar(1.0, -phase);
    }
  }

  // (5) Ito G noise, Euler-Maruyama
  if (model_.noise_g().count() > 0) {
    std::copy(u.begin(), u.end(), work_.begin());
    add_g_noise(work_, inc.dWt, u);
  }

  for (std::size_t i = 0; i < n; ++i) u[i] *= mask[i];
  state.t += dt;
  guard(state);
}

GalerkinState step_ito_exp_em(const GalerkinState& state, const Increments& inc, const Model& model,
                              double dt) {
  GalerkinState s = state;
  Stepper(model).step_ito_exp_em(s, inc, dt);
  return s;
}

GalerkinState step_strat_split(const GalerkinState& state, const Increments& inc,
                               const Model& model, double dt) {
  GalerkinState s = state;
  Stepper(model).step_strat_split(s, inc, dt);
  return s;
}

// ---------------------------------------------------------------------------
// Trajectories

std::vector<double> sample_times(const SdeConfig& cfg, double dt) {
  const std::size_t n = step_count(cfg.t_final, dt);
  std::vector<double> t{0.0};
  for (std::size_t s = 1; s <= n; ++s)
    if (s % cfg.snapshot_stride == 0 || s == n) t.push_back(static_cast<double>(s) * dt);
  return t;
}

TrajectoryRecord simulate(const Model& model, const SpectralField& initial,
                          const SimulateOptions& opts) {
  const auto& cfg = model.config();
  const double dt = opts.dt.value_or(cfg.dt);
  const Scheme scheme = opts.scheme.value_or(cfg.scheme);
  const std::size_t n = step_count(cfg.t_final, dt);

  TrajectoryRecord rec;
  GalerkinState state{initial, 0.0};
  rec.initial_projected = model.project(state.u);
  Stepper stepper(model);
  BrownianDriver driver(cfg.seed, opts.path, model.noise_b().count(), model.noise_g().count(),
                        opts.substeps);

  auto record = [&] {
    ObservableSample s = observe(state.u, model.basis(), model.nonlinearity(), state.t);
    s.hs_norm_sq = stepper.hs_norm_sq(state.u);
    rec.samples.push_back(s);
    if (opts.keep_snapshots) rec.snapshots.push_back(state.u);
  };

  record();
  Increments inc;
  for (std::size_t s = 1; s <= n; ++s) {
    driver.next(dt, inc);
    stepper.step(state, inc, scheme, dt);
    state.t = static_cast<double>(s) * dt;
    if (s % cfg.snapshot_stride == 0 || s == n) record();
  }
  rec.final_state = std::move(state.u);
  return rec;
}

// ---------------------------------------------------------------------------
// Ensembles

namespace {

struct Partial {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
};

Partial merge(const Partial& a, const Partial& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  Partial out;
  out.count = a.count + b.count;
  out.mean.resize(a.mean.size());
  out.m2.resize(a.mean.size());
  const double na = static_cast<double>(a.count), nb = static_cast<double>(b.count);
  const double n = na + nb;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double d = b.mean[i] - a.mean[i];
    out.mean[i] = a.mean[i] + d * nb / n;
    out.m2[i] = a.m2[i] + b.m2[i] + d * d * na * nb / n;
  }
  return out;
}

Partial reduce_tree(const std::vector<Partial>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(reduce_tree(parts, lo, mid), reduce_tree(parts, mid, hi));
}

constexpr std::size_t kBlockPaths = 32;

}  // namespace

SeriesStats run_paths(std::size_t n_paths, std::size_t n_series, std::size_t n_times,
                      const std::function<void(std::size_t, std::span<double>)>& fn,
                      unsigned threads) {
  if (n_paths == 0) throw ConfigError("ensemble needs at least one path");
  const std::size_t width = n_series * n_times;
  const std::size_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
  std::vector<Partial> parts(n_blocks);
  std::vector<std::exception_ptr> errors(n_blocks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::vector<double> row(width);
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        Partial p;
        p.mean.assign(width, 0.0);
        p.m2.assign(width, 0.0);
        const std::size_t end = std::min(n_paths, (b + 1) * kBlockPaths);
        for (std::size_t path = b * kBlockPaths; path < end; ++path) {
          std::fill(row.begin(), row.end(), 0.0);
          fn(path, row);
          ++p.count;
          const double c = static_cast<double>(p.count);
          for (std::size_t i = 0; i < width; ++i) {
            const double d = row[i] - p.mean[i];
            p.mean[i] += d / c;
            p.m2[i] += d * (row[i] - p.mean[i]);
          }
        }
        parts[b] = std::move(p);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const Partial total = reduce_tree(parts, 0, n_blocks);
  SeriesStats stats;
  stats.paths = total.count;
  const double n = static_cast<double>(total.count);
  for (std::size_t s = 0; s < n_series; ++s) {
    MomentTrace tr;
    for (std::size_t t = 0; t < n_times; ++t) {
      const std::size_t i = s * n_times + t;
      const double var = total.count > 1 ? total.m2[i] / (n - 1.0) : 0.0;
      tr.mean.push_back(total.mean[i]);
      tr.var.push_back(var);
      tr.std_err.push_back(std::sqrt(var / n));
    }
    stats.series.push_back(std::move(tr));
  }
  return stats;
}

std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::mass: return "mass";
    case Observable::energy: return "energy";
    case Observable::v_norm_sq: return "v_norm_sq";
    case Observable::z: return "z";
    case Observable::l_alpha1_norm: return "l_alpha1_norm";
    case Observable::hs_norm_sq: return "hs_norm_sq";
  }
  return "?";
}

double value_of(const ObservableSample& s, Observable o) {
  switch (o) {
    case Observable::mass: return s.mass;
    case Observable::energy: return s.energy;
    case Observable::v_norm_sq: return s.v_norm_sq;
    case Observable::z: return s.z;
    case Observable::l_alpha1_norm: return s.l_alpha1_norm;
    case Observable::hs_norm_sq: return s.hs_norm_sq;
  }
  return 0.0;
}

EnsembleStats simulate_ensemble(const Model& model, const SpectralField& initial,
                                std::size_t n_paths, const SimulateOptions& opts) {
  EnsembleStats out;
  out.times = sample_times(model.config(), opts.dt.value_or(model.config().dt));
  const std::size_t nt = out.times.size();
  auto stats = run_paths(n_paths, kObservableCount, nt, [&](std::size_t path, std::span<double> row) {
    SimulateOptions o = opts;
    o.path = path;
    o.keep_snapshots = false;
    const auto rec = simulate(model, initial, o);
    for (std::size_t k = 0; k < kObservableCount; ++k)
      for (std::size_t t = 0; t < nt; ++t)
        row[k * nt + t] = value_of(rec.samples[t], static_cast<Observable>(k));
  });
  out.paths = stats.paths;
  out.observables = std::move(stats.series);
  return out;
}

}  // namespace snls
