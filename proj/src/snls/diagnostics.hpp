#pragma once

// Per-trajectory and ensemble diagnostics built on the mass identity, the
// supermartingale e^{lambda t} |u|^2 and the contraction weight psi.

#include <vector>

#include "snls/dynamics.hpp"

namespace snls {

// Trapezoid rule over (possibly non-uniform) sample times.
std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& y);

// r(t) = mass(t) - mass(0) + 2 beta int_0^t mass - int_0^t hs_norm_sq.
std::vector<double> mass_budget_residual(const TrajectoryRecord& rec, double beta);

// Per-time ensemble statistics of the residual above.
MomentTrace mass_budget_ensemble(const Model& model, const SpectralField& initial,
                                 std::size_t n_paths, const SimulateOptions& opts = {});

struct SupermartingaleTrace {
  double lambda = 0.0;
  std::vector<double> times;
  std::vector<double> mean;     // E[e^{lambda t} mass(t)]
  std::vector<double> std_err;
  // Mean and standard error of the path-wise increment between consecutive samples.
  std::vector<double> step_mean;
  std::vector<double> step_std_err;
  // Sample indices i where the increment from i-1 to i exceeds 3 standard errors.
  std::vector<std::size_t> violations;
  bool monotone() const { return violations.empty(); }
};

// Requires C1 = 0 for G and lambda - 2 beta + C1t^2 < 0; otherwise throws
// ConfigError naming the failed inequality.
void check_supermartingale_preconditions(const Model& model, double lambda);

SupermartingaleTrace supermartingale_trace(const Model& model, const SpectralField& initial,
                                           std::size_t n_paths, double lambda,
                                           const SimulateOptions& opts = {});

struct ContractionTrace {
  std::vector<double> times;
  std::vector<double> d;         // e^{-int psi} |u1 - u2|^2
  std::vector<double> psi;
  std::vector<double> distance;  // |u1 - u2|_H^2
};

// psi(t) = 2 (|u1|_inf^{alpha-1} + |u2|_inf^{alpha-1} - beta) + L_G, with both
// trajectories driven by the same increments of path `opts.path`.
ContractionTrace contraction_diagnostic(const Model& model, const SpectralField& u10,
                                        const SpectralField& u20, const SimulateOptions& opts = {});

// Ensemble statistics of D(t) over common-noise pairs.
struct ContractionEnsemble {
  std::vector<double> times;
  MomentTrace d;
  double d0 = 0.0;
  // max_t E[D(t)] / D(0)
  double max_ratio = 0.0;
};

ContractionEnsemble contraction_ensemble(const Model& model, const SpectralField& u10,
                                         const SpectralField& u20, std::size_t n_pairs,
                                         const SimulateOptions& opts = {});

// Solution of m' = k m + 2 C1^2 with k = 2 (C1t^2 - beta), m(0) = mass(0).
// For k >= 0 it lies below (mass(0) + 2 C1^2 t) e^{kt}; for k < 0 that
// simpler form is not an upper bound.
double gronwall_envelope(double mass0, double t, const GConstants& c, double beta);

}  // namespace snls
