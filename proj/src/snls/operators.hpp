#pragma once

// Galerkin projections, the power nonlinearity and the two noise operators.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snls/spectral_domain.hpp"

namespace snls {

// ---------------------------------------------------------------------------
// Spectral profiles b(lambda), lambda = a_k, used to build diagonal noise
// symbols. Accepted forms: "c", "c/(1+lambda)", "c/(1+lambda)^p".
class Profile {
 public:
  static Profile parse(std::string_view text);
  static Profile constant(double c) { return Profile(c, 0.0); }

  double operator()(double lambda) const;
  // b(lambda) as lambda -> infinity.
  double limit() const { return power_ == 0.0 ? scale_ : 0.0; }
  bool is_constant() const { return power_ == 0.0; }
  const std::string& text() const { return text_; }

 private:
  Profile(double scale, double power);

  double scale_;
  double power_;
  std::string text_;
};

// ---------------------------------------------------------------------------
// Projections

// 1 where s_k < 2^{n+1}, 0 elsewhere.
std::vector<double> sharp_projector(int level, const EigenBasis& basis);

// Smooth bump on [1/2, 2] (in log2 scale, exp(-1/(1-y^2))).
double dyadic_bump(double t);
// rho(t) = h(t) / sum_j h(2^{-j} t): a dyadic partition of unity.
double dyadic_rho(double t);
// s_n(lambda): 1 below 2^n, rho(2^{-n} lambda) on [2^n, 2^{n+1}), 0 beyond.
double smoothed_multiplier(int level, double lambda);

struct SmoothedProjector {
  int level = 0;
  std::vector<double> weights;
};

SmoothedProjector smoothed_projector(int level, const EigenBasis& basis);

// Mode-wise multiplication by real weights.
SpectralField apply_weights(const SpectralField& u, std::span<const double> weights);
void apply_weights_inplace(std::span<cplx> coeffs, std::span<const double> weights);

// ---------------------------------------------------------------------------
// F(u) = |u|^{alpha-1} u, evaluated pseudospectrally.
class Nonlinearity {
 public:
  Nonlinearity(const EigenBasis& basis, double alpha);

  double alpha() const { return alpha_; }
  // Grid on which F is evaluated: exact dealiasing for odd integer alpha,
  // the configured oversampling otherwise.
  const EigenBasis& grid_basis() const { return grid_; }
  bool exactly_dealiased() const { return exact_; }

  // Analysis of F(u) onto the mode set (not projected by P_n).
  SpectralField apply(const SpectralField& u) const;
  void apply(std::span<const cplx> coeffs, std::span<cplx> out, std::span<cplx> grid_buf) const;

  // ||u||_{L^{alpha+1}}^{alpha+1} / (alpha+1).
  double antiderivative(const SpectralField& u) const;
  double l_alpha1_norm(const SpectralField& u) const;
  // ||F(u)||_{L^{(alpha+1)/alpha}}, pointwise on the grid.
  double dual_norm(const SpectralField& u) const;
  double sup_norm(const SpectralField& u) const;

 private:
  double alpha_;
  bool exact_;
  EigenBasis grid_;
};

SpectralField apply_F(const SpectralField& u, const Nonlinearity& f);
double antiderivative_F(const SpectralField& u, const Nonlinearity& f);

// ---------------------------------------------------------------------------
// Linear Stratonovich noise: B_m diagonal with real symbol b_{m,k}.
struct LinearNoiseB {
  std::vector<std::vector<double>> multipliers;
  std::vector<std::string> profiles;
  // sum_m ||B_m||^2_{L(H)} = sum_m max_k b_{m,k}^2
  double norm_sq_H = 0.0;
  // Bound on ||B||^2_{L(V, gamma(Y1, V))}; equal to norm_sq_H for diagonal symbols.
  double norm_sq_V = 0.0;
  // Bound on ||B||^2_{L(L^{alpha+1}, gamma(Y1, L^{alpha+1}))} through the
  // L^1 norm of each convolution kernel.
  double norm_sq_Lp = 0.0;

  std::size_t count() const { return multipliers.size(); }
};

LinearNoiseB make_linear_noise(const EigenBasis& basis, const std::vector<Profile>& profiles);

// -1/2 sum_m B_m^2, or -1/2 sum_m (S_n B_m S_n)^2 when weights are given.
std::vector<double> stratonovich_correction(const LinearNoiseB& b,
                                            std::optional<std::span<const double>> weights = {});

// ---------------------------------------------------------------------------
// State-dependent Ito noise G.
enum class GVariant { none, additive, linear_diagonal, bounded_nemytskii };

std::string_view to_string(GVariant v);
GVariant parse_g_variant(std::string_view name);

struct GConstants {
  double C1 = 0, C1t = 0;  // H growth
  double C2 = 0, C2t = 0;  // V growth
  double C3 = 0, C3t = 0;  // L^{alpha+1} growth
  double lipschitz = 0;    // L_G
};

struct GOutput {
  std::vector<SpectralField> fields;
  double hs_norm_sq = 0.0;
};

class StateNoiseG {
 public:
  StateNoiseG() = default;
  // params: ';'-separated key=value pairs, e.g. "count=8;profile=0.2/(1+lambda)",
  // "gamma=0.5,0.5", "count=4;profile=0.3;scale=1".
  static StateNoiseG make(GVariant variant, std::string_view params, const EigenBasis& basis,
                          double alpha);
  static StateNoiseG linear_diagonal(std::vector<double> gammas);
  static StateNoiseG additive(std::vector<SpectralField> g, const EigenBasis& basis, double alpha);

  GVariant variant() const { return variant_; }
  std::size_t count() const;
  const GConstants& constants() const { return constants_; }
  std::span<const double> gammas() const { return gammas_; }

  GOutput apply(const SpectralField& u, const EigenBasis& basis) const;
  // Writes G(u)e_m into out[m] (each sized like coeffs); returns the
  // Hilbert-Schmidt norm squared.
  double apply(std::span<const cplx> coeffs, std::vector<std::vector<cplx>>& out,
               const EigenBasis& basis, std::span<cplx> grid_a, std::span<cplx> grid_b) const;

 private:
  GVariant variant_ = GVariant::none;
  std::vector<double> gammas_;
  std::vector<std::vector<cplx>> g_;  // spectral coefficients of g_m
  double scale_ = 0.0;                 // sigma bound for the Nemytskii variant
  GConstants constants_;
};

GOutput apply_G(const SpectralField& u, const StateNoiseG& g, const EigenBasis& basis);

}  // namespace snls
