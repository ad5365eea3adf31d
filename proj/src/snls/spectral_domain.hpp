#pragma once

// Concrete eigen-decompositions of the Laplace-type operator A and the
// reference operator S on flat tori and boxes, together with the quadrature
// grid used for pointwise work.
//
// Conventions
//   torus:     D = (0, 2pi)^d, h_k = e^{i k.x} / (2pi)^{d/2},  k in [-K/2, K/2)
//              a_k = |k|^2, s_k = 1 + |k|^2
//   dirichlet: D = (0, pi)^d,  h_k = prod sqrt(2/pi) sin(k_i x_i), k_i in [1, K]
//              a_k = s_k = |k|^2
//   neumann:   D = (0, pi)^d,  h_k = prod c_{k_i} cos(k_i x_i),   k_i in [0, K)
//              a_k = |k|^2, s_k = 1 + |k|^2
// Grids use N = oversample * K points per axis: equispaced nodes on the
// torus, cell midpoints on boxes. All quadrature weights are equal.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace snls {

using cplx = std::complex<double>;

enum class DomainKind { torus1d, torus2d, dirichlet1d, dirichlet2d, neumann1d, neumann2d };

std::string_view to_string(DomainKind kind);
// Throws ConfigError on an unknown name.
DomainKind parse_domain_kind(std::string_view name);

enum class Spectrum { A, S };

// Complex coefficients aligned with the mode list of one EigenBasis.
struct SpectralField {
  std::vector<cplx> coeffs;
  std::uint64_t basis_tag = 0;

  std::size_t size() const { return coeffs.size(); }
};

struct FieldNorms {
  double h_norm_sq = 0.0;
  double v_norm_sq = 0.0;
  double lp_norm = 0.0;
};

class EigenBasis {
 public:
  EigenBasis(DomainKind kind, int modes_per_axis, int oversample = 2);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int modes_per_axis() const { return modes_per_axis_; }
  int oversample() const { return oversample_; }
  bool is_torus() const;

  std::size_t size() const { return a_eigs_.size(); }
  // Multi-index of mode i; second component is 0 in one dimension.
  std::array<int, 2> mode(std::size_t i) const { return modes_[i]; }
  std::span<const double> a_eigs() const { return a_eigs_; }
  std::span<const double> s_eigs() const { return s_eigs_; }
  double eig(Spectrum which, std::size_t i) const {
    return which == Spectrum::A ? a_eigs_[i] : s_eigs_[i];
  }
  // Exact sup norm of the eigenfunction h_i over D.
  double eigenfunction_sup(std::size_t i) const;

  int grid_points_per_axis() const { return grid_n_; }
  std::size_t grid_size() const { return grid_size_; }
  double quadrature_weight() const { return weight_; }
  double domain_measure() const { return measure_; }
  // Physical coordinates of grid node j (second component 0 in 1-D).
  std::array<double, 2> grid_point(std::size_t j) const;

  // Identifies the mode set; independent of the oversampling factor.
  std::uint64_t tag() const { return tag_; }

  // Same modes, different grid resolution.
  EigenBasis refined(int oversample) const;

  SpectralField zero_field() const;
  // Throws ShapeError when the field does not belong to this basis.
  void check(const SpectralField& u) const;

  // <f, h_k>_H by grid quadrature. Throws ShapeError on a size mismatch.
  SpectralField to_spectral(std::span<const cplx> grid) const;
  // sum_k c_k h_k evaluated on the grid.
  std::vector<cplx> from_spectral(const SpectralField& u) const;

  // Allocation-free variants used inside time steppers.
  void analyze(std::span<const cplx> grid, std::span<cplx> coeffs) const;
  void synthesize(std::span<const cplx> coeffs, std::span<cplx> grid) const;

 private:
  struct Transforms;

  DomainKind kind_;
  int dim_;
  int modes_per_axis_;
  int oversample_;
  int grid_n_;
  std::size_t grid_size_;
  double weight_;
  double measure_;
  std::uint64_t tag_;
  std::vector<std::array<int, 2>> modes_;
  std::vector<double> a_eigs_;
  std::vector<double> s_eigs_;
  // Position of each mode in the transform array and the combined
  // analysis/synthesis scale factors.
  std::vector<std::size_t> slot_;
  std::vector<double> analysis_scale_;
  std::vector<double> synthesis_scale_;
  std::shared_ptr<const Transforms> transforms_;
};

// Coefficient-wise multiplication by a_k^exponent (or s_k^exponent). Zero
// eigenvalues raised to a negative power map the mode to 0.
SpectralField apply_frac_power(const SpectralField& u, const EigenBasis& basis,
                               Spectrum which, double exponent);

double h_norm_sq(const SpectralField& u);
double v_norm_sq(const SpectralField& u, const EigenBasis& basis);
// ||u||_{L^p} by grid quadrature on the basis grid.
double lp_norm(const SpectralField& u, const EigenBasis& basis, double p);
// Max of |u| over the basis grid.
double sup_norm(const SpectralField& u, const EigenBasis& basis);
FieldNorms norms(const SpectralField& u, const EigenBasis& basis, double p);

// <u, v>_H = sum_k u_k conj(v_k).
cplx inner(const SpectralField& u, const SpectralField& v);

}  // namespace snls
