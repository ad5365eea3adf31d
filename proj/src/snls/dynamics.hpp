#pragma once

// Time integration of the Galerkin system
//   du = -[iAu + iP_n F(u) + beta u - b_n u] dt - i S_n B(S_n u) dW - i S_n G(S_n u) dW~
// in H_n = range(P_n).

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snls/observables.hpp"
#include "snls/operators.hpp"
#include "snls/spectral_domain.hpp"

namespace snls {

enum class Scheme { ito_exp_em, strat_split };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

struct SdeConfig {
  DomainKind domain = DomainKind::torus1d;
  int modes_per_axis = 32;
  int oversample = 2;
  // Negative: smallest level whose P_n keeps every mode with weight 1.
  int galerkin_level = -1;
  double alpha = 3.0;
  double beta = 1.0;
  Scheme scheme = Scheme::ito_exp_em;
  double dt = 1e-3;
  double t_final = 1.0;
  std::uint64_t seed = 7;
  int snapshot_stride = 1;
  std::size_t paths = 1;
  bool nonlinearity_enabled = true;
  std::vector<std::string> b_profiles;
  GVariant g_variant = GVariant::none;
  std::string g_params;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Smallest n with 2^n > max s_k, i.e. S_n = P_n = identity on the mode set.
int full_resolution_level(const EigenBasis& basis);

// Everything a trajectory needs, built once and shared read-only.
class Model {
 public:
  explicit Model(const SdeConfig& cfg);
  Model(const SdeConfig& cfg, StateNoiseG g);

  const SdeConfig& config() const { return cfg_; }
  const EigenBasis& basis() const { return basis_; }
  const Nonlinearity& nonlinearity() const { return f_; }
  int level() const { return level_; }
  std::span<const double> mask() const { return mask_; }
  const SmoothedProjector& smoothed() const { return smoothed_; }
  const LinearNoiseB& noise_b() const { return b_; }
  const StateNoiseG& noise_g() const { return g_; }
  // Diagonal of b_n = -1/2 sum_m (S_n B_m S_n)^2.
  std::span<const double> correction() const { return correction_; }
  // w_k^2 b_{m,k}: symbols of S_n B_m S_n.
  const std::vector<std::vector<double>>& projected_b() const { return sbs_; }

  // P_n u; returns true when u had mass outside range(P_n).
  bool project(SpectralField& u) const;
  bool in_range(const SpectralField& u) const;

 private:
  void build();

  SdeConfig cfg_;
  EigenBasis basis_;
  Nonlinearity f_;
  int level_ = 0;
  std::vector<double> mask_;
  SmoothedProjector smoothed_;
  LinearNoiseB b_;
  StateNoiseG g_;
  std::vector<double> correction_;
  std::vector<std::vector<double>> sbs_;
};

struct GalerkinState {
  SpectralField u;
  double t = 0.0;
};

struct Increments {
  std::vector<double> dW;   // one per B mode
  std::vector<double> dWt;  // one per G mode
};

// Independent N(0, dt) increments for W and W~ derived from
// (seed, path). With substeps > 1, each increment is the sum of `substeps`
// finer increments, so drivers with substeps 1, 2, 4 at dt, 2dt, 4dt sample
// the same Brownian path.
class BrownianDriver {
 public:
  BrownianDriver(std::uint64_t seed, std::uint64_t path, std::size_t b_count, std::size_t g_count,
                 int substeps = 1);

  void next(double dt, Increments& inc);
  Increments next(double dt);

 private:
  std::size_t b_count_;
  std::size_t g_count_;
  int substeps_;
  std::mt19937_64 w_rng_;
  std::mt19937_64 wt_rng_;
  std::normal_distribution<double> w_normal_;
  std::normal_distribution<double> wt_normal_;
};

// -iAu - iP_n F(u) - beta u + b_n u (the F term only when enabled).
SpectralField drift(const GalerkinState& state, const Model& model);

// Single-trajectory stepper with preallocated work buffers.
class Stepper {
 public:
  explicit Stepper(const Model& model);

  void step(GalerkinState& state, const Increments& inc, Scheme scheme, double dt);
  void step_ito_exp_em(GalerkinState& state, const Increments& inc, double dt);
  void step_strat_split(GalerkinState& state, const Increments& inc, double dt);

  // sum_m |S_n G(S_n u) e_m|^2
  double hs_norm_sq(const SpectralField& u);

 private:
  void set_dt(double dt);
  // Accumulates -i sum_m dWt_m S_n G(S_n u) e_m into out.
  double add_g_noise(std::span<const cplx> u, std::span<const double> dwt, std::span<cplx> out);
  void guard(const GalerkinState& state) const;

  const Model& model_;
  double dt_ = -1.0;
  std::vector<cplx> rotation_;
  std::vector<cplx> work_;
  std::vector<cplx> fu_;
  std::vector<cplx> su_;
  std::vector<cplx> grid_nl_;
  std::vector<cplx> grid_a_;
  std::vector<cplx> grid_b_;
  std::vector<std::vector<cplx>> g_out_;
};

GalerkinState step_ito_exp_em(const GalerkinState& state, const Increments& inc, const Model& model,
                              double dt);
GalerkinState step_strat_split(const GalerkinState& state, const Increments& inc,
                               const Model& model, double dt);

// Norm guard for the integrators: |u|_V above this (or non-finite) aborts.
inline constexpr double kBlowUpThreshold = 1e8;

struct SimulateOptions {
  std::uint64_t path = 0;
  int substeps = 1;
  bool keep_snapshots = false;
  // Overrides of the configured values (when set).
  std::optional<Scheme> scheme;
  std::optional<double> dt;
};

struct TrajectoryRecord {
  std::vector<ObservableSample> samples;
  std::vector<SpectralField> snapshots;
  SpectralField final_state;
  // The initial field had mass outside range(P_n) and was projected.
  bool initial_projected = false;
};

TrajectoryRecord simulate(const Model& model, const SpectralField& initial,
                          const SimulateOptions& opts = {});

// Sample times shared by every path of a run.
std::vector<double> sample_times(const SdeConfig& cfg, double dt);

// ---------------------------------------------------------------------------
// Monte Carlo reduction

struct MomentTrace {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> std_err;
};

// Path-wise series reduced to per-time statistics. Paths are grouped into
// fixed blocks and blocks are merged pairwise in index order, so the result
// does not depend on thread scheduling.
struct SeriesStats {
  std::size_t paths = 0;
  std::vector<MomentTrace> series;
};

// fn(path, out) fills out[series * n_times + time].
SeriesStats run_paths(std::size_t n_paths, std::size_t n_series, std::size_t n_times,
                      const std::function<void(std::size_t, std::span<double>)>& fn,
                      unsigned threads = 0);

enum class Observable { mass, energy, v_norm_sq, z, l_alpha1_norm, hs_norm_sq };
inline constexpr std::size_t kObservableCount = 6;
std::string_view to_string(Observable o);
double value_of(const ObservableSample& s, Observable o);

struct EnsembleStats {
  std::vector<double> times;
  std::size_t paths = 0;
  std::vector<MomentTrace> observables;  // indexed by Observable

  const MomentTrace& operator[](Observable o) const {
    return observables[static_cast<std::size_t>(o)];
  }
};

EnsembleStats simulate_ensemble(const Model& model, const SpectralField& initial,
                                std::size_t n_paths, const SimulateOptions& opts = {});

}  // namespace snls
