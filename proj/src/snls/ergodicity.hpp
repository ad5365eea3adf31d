#pragma once

// Time averages, occupation profiles and invariant-measure fingerprints.

#include <string>
#include <vector>

#include "snls/dynamics.hpp"

namespace snls {

// Bounded functionals of one state.
struct Functional {
  enum class Kind { one, tanh_v_norm_sq, min_mass_1, v_norm_above };
  Kind kind = Kind::min_mass_1;
  double radius = 0.0;  // for v_norm_above: indicator |u|_V > radius

  double operator()(const ObservableSample& s) const;
  std::string name() const;
  // Accepts "one", "tanh_v_norm_sq", "min_mass_1", "v_norm_above:R".
  static Functional parse(const std::string& text);
};

struct TimeAverageReport {
  std::string observable;
  double burn_in = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double value = 0.0;
  double quarters[4] = {0, 0, 0, 0};
  std::string initial_tag;
};

// Trapezoid average of phi over [burn_in, T], plus the same average over the
// four quarters of that window.
TimeAverageReport time_average(const std::vector<ObservableSample>& samples, const Functional& phi,
                               double burn_in, const std::string& tag = "");

struct TightnessProfile {
  std::vector<double> radii;
  std::vector<double> fractions;
};

// fractions[j] = |{t <= T : |u(t)|_V > radii[j]}| / T, with the state held
// constant on each sample interval (left endpoint).
TightnessProfile tightness_profile(const std::vector<ObservableSample>& samples,
                                   const std::vector<double>& radii);

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct InitialDatum {
  std::string tag;
  SpectralField u;
};

struct FingerprintRow {
  std::string phi;
  std::string initial_tag;
  double value = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
};

struct FingerprintReport {
  std::vector<FingerprintRow> rows;
  std::vector<std::string> phis;
  // Per functional: max pairwise |nu_T difference| and max pairwise KS
  // distance of the post-burn-in snapshot values.
  std::vector<double> discrepancy;
  std::vector<double> ks;
};

// One trajectory per initial datum. With common_noise every datum is driven
// by path 0, otherwise datum i uses path i.
FingerprintReport invariant_fingerprint(const Model& model, const std::vector<InitialDatum>& data,
                                        const std::vector<Functional>& phis,
                                        double burn_in_fraction, bool common_noise = true,
                                        const SimulateOptions& opts = {});

struct DecayFit {
  double rate = 0.0;
  double std_err = 0.0;  // statistical standard error of the slope
  double ci_low = 0.0;
  double ci_high = 0.0;
  // Set when the data do not decay (rate >= 0 or non-positive means).
  bool warning = false;
  std::string message;
};

// Weighted least-squares slope of log E[mass] over samples with t in
// [t0, t1]; weights from the standard error of log E[mass]. CI at 95%.
DecayFit decay_rate_fit(const std::vector<double>& times, const MomentTrace& mass, double t0,
                        double t1);

// Fits at dt and dt/2 on a common Brownian path and extrapolates
// rate = 2 r(dt/2) - r(dt). The CI adds |r(dt) - r(dt/2)| to the
// statistical half-width, so it also covers the time-discretisation bias.
// Requires C1 = 0 for G.
DecayFit decay_rate_fit(const Model& model, const SpectralField& initial, std::size_t n_paths,
                        double t0, double t1, const SimulateOptions& opts = {});

}  // namespace snls
