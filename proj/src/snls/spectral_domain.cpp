#include "snls/spectral_domain.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "snls/errors.hpp"

namespace snls {

namespace {

constexpr double kPi = std::numbers::pi;

// The FFTW planner is not re-entrant; execution of existing plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

enum class Family { torus, dirichlet, neumann };

Family family_of(DomainKind k) {
  switch (k) {
    case DomainKind::torus1d:
    case DomainKind::torus2d:
      return Family::torus;
    case DomainKind::dirichlet1d:
    case DomainKind::dirichlet2d:
      return Family::dirichlet;
    default:
      return Family::neumann;
  }
}

int dim_of(DomainKind k) {
  switch (k) {
    case DomainKind::torus2d:
    case DomainKind::dirichlet2d:
    case DomainKind::neumann2d:
      return 2;
    default:
      return 1;
  }
}

std::vector<int> axis_modes(Family f, int K) {
  std::vector<int> ks;
  ks.reserve(K);
  switch (f) {
    case Family::torus:
      for (int k = -K / 2; k < K - K / 2; ++k) ks.push_back(k);
      break;
    case Family::dirichlet:
      for (int k = 1; k <= K; ++k) ks.push_back(k);
      break;
    case Family::neumann:
      for (int k = 0; k < K; ++k) ks.push_back(k);
      break;
  }
  return ks;
}

struct AxisScale {
  std::size_t slot;
  double analysis;
  double synthesis;
};

AxisScale axis_scale(Family f, int k, int n) {
  const double N = static_cast<double>(n);
  switch (f) {
    case Family::torus:
      return {static_cast<std::size_t>(((k % n) + n) % n), std::sqrt(2.0 * kPi) / N,
              1.0 / std::sqrt(2.0 * kPi)};
    case Family::dirichlet:
      return {static_cast<std::size_t>(k - 1), std::sqrt(2.0 / kPi) * (kPi / N) / 2.0,
              std::sqrt(2.0 / kPi) / 2.0};
    case Family::neumann:
      if (k == 0) return {0, (1.0 / std::sqrt(kPi)) * (kPi / N) / 2.0, 1.0 / std::sqrt(kPi)};
      return {static_cast<std::size_t>(k), std::sqrt(2.0 / kPi) * (kPi / N) / 2.0,
              std::sqrt(2.0 / kPi) / 2.0};
  }
  return {};
}

thread_local std::vector<cplx> tl_scratch;

std::span<cplx> scratch(std::size_t n) {
  if (tl_scratch.size() < n) tl_scratch.resize(n);
  return {tl_scratch.data(), n};
}

}  // namespace

std::string_view to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::torus1d: return "torus1d";
    case DomainKind::torus2d: return "torus2d";
    case DomainKind::dirichlet1d: return "dirichlet1d";
    case DomainKind::dirichlet2d: return "dirichlet2d";
    case DomainKind::neumann1d: return "neumann1d";
    case DomainKind::neumann2d: return "neumann2d";
  }
  return "?";
}

DomainKind parse_domain_kind(std::string_view name) {
  for (auto k : {DomainKind::torus1d, DomainKind::torus2d, DomainKind::dirichlet1d,
                 DomainKind::dirichlet2d, DomainKind::neumann1d, DomainKind::neumann2d}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown domain kind '" + std::string(name) + "'");
}

// Forward and backward plans for one grid. Complex data is handled by the
// real-to-real plans as two interleaved real arrays (stride 2, howmany 2).
struct EigenBasis::Transforms {
  Family family;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  Transforms(Family f, int dim, int n) : family(f) {
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(n);
    std::vector<cplx> a(total), b(total);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    int dims[2] = {n, n};
    std::lock_guard lock(planner_mutex());
    if (f == Family::torus) {
      forward = fftw_plan_dft(dim, dims, pa, pb, FFTW_FORWARD, flags);
      backward = fftw_plan_dft(dim, dims, pa, pb, FFTW_BACKWARD, flags);
    } else {
      const fftw_r2r_kind fk = f == Family::dirichlet ? FFTW_RODFT10 : FFTW_REDFT10;
      const fftw_r2r_kind bk = f == Family::dirichlet ? FFTW_RODFT01 : FFTW_REDFT01;
      fftw_r2r_kind fks[2] = {fk, fk};
      fftw_r2r_kind bks[2] = {bk, bk};
      auto* ra = reinterpret_cast<double*>(a.data());
      auto* rb = reinterpret_cast<double*>(b.data());
      forward = fftw_plan_many_r2r(dim, dims, 2, ra, nullptr, 2, 1, rb, nullptr, 2, 1, fks, flags);
      backward = fftw_plan_many_r2r(dim, dims, 2, ra, nullptr, 2, 1, rb, nullptr, 2, 1, bks, flags);
    }
    if (!forward || !backward) throw Error("FFTW planning failed");
  }

  ~Transforms() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  Transforms(const Transforms&) = delete;
  Transforms& operator=(const Transforms&) = delete;

  void run(fftw_plan p, const cplx* in, cplx* out) const {
    // FFTW's new-array interface takes non-const input but does not modify it
    // for out-of-place plans.
    auto* i = const_cast<cplx*>(in);
    if (family == Family::torus) {
      fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(i), reinterpret_cast<fftw_complex*>(out));
    } else {
      fftw_execute_r2r(p, reinterpret_cast<double*>(i), reinterpret_cast<double*>(out));
    }
  }
};

EigenBasis::EigenBasis(DomainKind kind, int modes_per_axis, int oversample)
    : kind_(kind), dim_(dim_of(kind)), modes_per_axis_(modes_per_axis), oversample_(oversample) {
  if (modes_per_axis < 1) throw ConfigError("modes_per_axis must be at least 1");
  if (oversample < 2) throw ConfigError("oversample must be at least 2");
  const Family fam = family_of(kind);
  if (fam == Family::torus && modes_per_axis % 2 != 0)
    throw ConfigError("modes_per_axis must be even on a torus");

  grid_n_ = oversample * modes_per_axis;
  grid_size_ = dim_ == 1 ? grid_n_ : static_cast<std::size_t>(grid_n_) * grid_n_;
  const double length = fam == Family::torus ? 2.0 * kPi : kPi;
  weight_ = std::pow(length / grid_n_, dim_);
  measure_ = std::pow(length, dim_);
  tag_ = (static_cast<std::uint64_t>(kind) << 32) ^ static_cast<std::uint64_t>(modes_per_axis) ^
         0x5eed5eedULL;

  const auto ks = axis_modes(fam, modes_per_axis);
  const double shift = fam == Family::dirichlet ? 0.0 : 1.0;
  auto push = [&](int k1, int k2) {
    const double a = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    modes_.push_back({k1, k2});
    a_eigs_.push_back(a);
    s_eigs_.push_back(shift + a);
    const AxisScale s1 = axis_scale(fam, k1, grid_n_);
    if (dim_ == 1) {
      slot_.push_back(s1.slot);
      analysis_scale_.push_back(s1.analysis);
      synthesis_scale_.push_back(s1.synthesis);
    } else {
      const AxisScale s2 = axis_scale(fam, k2, grid_n_);
      slot_.push_back(s1.slot * grid_n_ + s2.slot);
      analysis_scale_.push_back(s1.analysis * s2.analysis);
      synthesis_scale_.push_back(s1.synthesis * s2.synthesis);
    }
  };
  if (dim_ == 1) {
    for (int k : ks) push(k, 0);
  } else {
    for (int k1 : ks)
      for (int k2 : ks) push(k1, k2);
  }
  transforms_ = std::make_shared<const Transforms>(fam, dim_, grid_n_);
}

bool EigenBasis::is_torus() const { return family_of(kind_) == Family::torus; }

double EigenBasis::eigenfunction_sup(std::size_t i) const {
  const Family fam = family_of(kind_);
  auto axis = [&](int k) {
    if (fam == Family::torus) return 1.0 / std::sqrt(2.0 * kPi);
    if (fam == Family::neumann && k == 0) return 1.0 / std::sqrt(kPi);
    return std::sqrt(2.0 / kPi);
  };
  const auto k = modes_[i];
  return dim_ == 1 ? axis(k[0]) : axis(k[0]) * axis(k[1]);
}

std::array<double, 2> EigenBasis::grid_point(std::size_t j) const {
  const double n = grid_n_;
  auto coord = [&](std::size_t idx) {
    return is_torus() ? 2.0 * kPi * static_cast<double>(idx) / n
                      : (static_cast<double>(idx) + 0.5) * kPi / n;
  };
  if (dim_ == 1) return {coord(j), 0.0};
  return {coord(j / grid_n_), coord(j % grid_n_)};
}

EigenBasis EigenBasis::refined(int oversample) const {
  return EigenBasis(kind_, modes_per_axis_, oversample);
}

SpectralField EigenBasis::zero_field() const {
  return SpectralField{std::vector<cplx>(size()), tag_};
}

void EigenBasis::check(const SpectralField& u) const {
  if (u.basis_tag != tag_ || u.coeffs.size() != size())
    throw ShapeError("field with " + std::to_string(u.coeffs.size()) +
                     " coefficients does not belong to a basis of " + std::to_string(size()) +
                     " modes");
}

SpectralField EigenBasis::to_spectral(std::span<const cplx> grid) const {
  if (grid.size() != grid_size_)
    throw ShapeError("grid of " + std::to_string(grid.size()) + " samples, expected " +
                     std::to_string(grid_size_));
  SpectralField out = zero_field();
  analyze(grid, out.coeffs);
  return out;
}

std::vector<cplx> EigenBasis::from_spectral(const SpectralField& u) const {
  check(u);
  std::vector<cplx> grid(grid_size_);
  synthesize(u.coeffs, grid);
  return grid;
}

void EigenBasis::analyze(std::span<const cplx> grid, std::span<cplx> coeffs) const {
  auto buf = scratch(grid_size_);
  transforms_->run(transforms_->forward, grid.data(), buf.data());
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = analysis_scale_[i] * buf[slot_[i]];
}

void EigenBasis::synthesize(std::span<const cplx> coeffs, std::span<cplx> grid) const {
  auto buf = scratch(grid_size_);
  std::fill(buf.begin(), buf.end(), cplx{});
  for (std::size_t i = 0; i < coeffs.size(); ++i) buf[slot_[i]] = synthesis_scale_[i] * coeffs[i];
  transforms_->run(transforms_->backward, buf.data(), grid.data());
}

SpectralField apply_frac_power(const SpectralField& u, const EigenBasis& basis, Spectrum which,
                               double exponent) {
  basis.check(u);
  SpectralField out = u;
  if (exponent == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lambda = basis.eig(which, i);
    if (lambda == 0.0) {
      out.coeffs[i] = cplx{};
      continue;
    }
    out.coeffs[i] *= exponent == 1.0 ? lambda : std::pow(lambda, exponent);
  }
  return out;
}

double h_norm_sq(const SpectralField& u) {
  double s = 0.0;
  for (const auto& c : u.coeffs) s += std::norm(c);
  return s;
}

double v_norm_sq(const SpectralField& u, const EigenBasis& basis) {
  basis.check(u);
  double s = 0.0;
  const auto a = basis.a_eigs();
  for (std::size_t i = 0; i < u.size(); ++i) s += (1.0 + a[i]) * std::norm(u.coeffs[i]);
  return s;
}

double lp_norm(const SpectralField& u, const EigenBasis& basis, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("L^p exponent must lie in [1, inf)");
  const auto grid = basis.from_spectral(u);
  double s = 0.0;
  for (const auto& z : grid) s += std::pow(std::abs(z), p);
  return std::pow(s * basis.quadrature_weight(), 1.0 / p);
}

double sup_norm(const SpectralField& u, const EigenBasis& basis) {
  const auto grid = basis.from_spectral(u);
  double m = 0.0;
  for (const auto& z : grid) m = std::max(m, std::abs(z));
  return m;
}

FieldNorms norms(const SpectralField& u, const EigenBasis& basis, double p) {
  return {h_norm_sq(u), v_norm_sq(u, basis), lp_norm(u, basis, p)};
}

cplx inner(const SpectralField& u, const SpectralField& v) {
  if (u.basis_tag != v.basis_tag || u.size() != v.size())
    throw ShapeError("inner product of fields from different bases");
  cplx s{};
  for (std::size_t i = 0; i < u.size(); ++i) s += u.coeffs[i] * std::conj(v.coeffs[i]);
  return s;
}

}  // namespace snls
