#include "snls/operators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <regex>

#include "snls/errors.hpp"

namespace snls {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  try {
    std::size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + std::string(what) + " '" + t + "' as a number");
  }
}

std::vector<double> parse_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto piece = s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start);
    out.push_back(parse_number(piece, what));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::map<std::string, std::string> parse_params(std::string_view params) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  while (start < params.size()) {
    auto semi = params.find(';', start);
    auto item = params.substr(start, semi == std::string_view::npos ? params.size() - start
                                                                  : semi - start);
    start = semi == std::string_view::npos ? params.size() : semi + 1;
    if (trim(item).empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("noise.G.params entry '" + trim(item) + "' is not key=value");
    auto key = trim(item.substr(0, eq));
    if (out.count(key)) throw ConfigError("noise.G.params repeats '" + key + "'");
    out[key] = trim(item.substr(eq + 1));
  }
  return out;
}

// Modes ordered by s_k ascending (ties by index).
std::vector<std::size_t> modes_by_s(const EigenBasis& basis) {
  std::vector<std::size_t> idx(basis.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto s = basis.s_eigs();
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] < s[b]; });
  return idx;
}

// L^1 norm over one period of the 2pi-periodic kernel with symbol r(|k|^2).
// Boxes are handled through the even/odd periodic extension, which has the
// same kernel.
double kernel_l1_norm(const Profile& p, int dim) {
  const double b_inf = p.limit();
  const int M = dim == 1 ? 2048 : 128;
  const EigenBasis torus(dim == 1 ? DomainKind::torus1d : DomainKind::torus2d, M, 2);
  SpectralField k = torus.zero_field();
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * dim);
  for (std::size_t i = 0; i < torus.size(); ++i) k.coeffs[i] = norm * (p(torus.a_eigs()[i]) - b_inf);
  const auto grid = torus.from_spectral(k);
  double s = 0.0;
  for (const auto& z : grid) s += std::abs(z);
  return s * torus.quadrature_weight();
}

int dealias_factor(const EigenBasis& basis, double alpha, bool& exact) {
  const double r = std::round(alpha);
  exact = std::abs(alpha - r) < 1e-12 && static_cast<long>(r) % 2 == 1;
  if (!exact) return std::max(basis.oversample(), 2);
  const int half = static_cast<int>((r + 1.0) / 2.0);
  // Boxes reflect at 2N, so the top retained mode K needs one extra factor
  // on Dirichlet grids.
  const int need = basis.kind() == DomainKind::dirichlet1d || basis.kind() == DomainKind::dirichlet2d
                       ? half + 1
                       : half;
  return std::max(basis.oversample(), need);
}

}  // namespace

// ---------------------------------------------------------------------------
// Profile

Profile::Profile(double scale, double power) : scale_(scale), power_(power) {
  text_ = power == 0.0 ? std::to_string(scale)
                       : std::to_string(scale) + "/(1+lambda)^" + std::to_string(power);
}

Profile Profile::parse(std::string_view text) {
  static const std::regex re(
      R"(^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(?:/\s*\(\s*1\s*\+\s*lambda\s*\)\s*(?:\^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))?)?\s*$)");
  std::cmatch m;
  const std::string t(text);
  if (!std::regex_match(t.c_str(), m, re))
    throw ConfigError("unrecognised noise profile '" + t +
                      "' (expected c, c/(1+lambda) or c/(1+lambda)^p)");
  const double c = std::stod(m[1].str());
  double power = 0.0;
  if (t.find("lambda") != std::string::npos) power = m[2].matched ? std::stod(m[2].str()) : 1.0;
  Profile p(c, power);
  p.text_ = trim(text);
  return p;
}

double Profile::operator()(double lambda) const {
  if (power_ == 0.0) return scale_;
  return scale_ / std::pow(1.0 + lambda, power_);
}

// ---------------------------------------------------------------------------
// Projections

std::vector<double> sharp_projector(int level, const EigenBasis& basis) {
  if (level < 0) throw ConfigError("galerkin level must be non-negative");
  const double cut = std::ldexp(1.0, level + 1);
  std::vector<double> mask(basis.size());
  const auto s = basis.s_eigs();
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = s[i] < cut ? 1.0 : 0.0;
  return mask;
}

double dyadic_bump(double t) {
  if (!(t > 0.5) || !(t < 2.0)) return 0.0;
  const double y = std::log2(t);
  return std::exp(-1.0 / (1.0 - y * y));
}

double dyadic_rho(double t) {
  const double h = dyadic_bump(t);
  if (h == 0.0) return 0.0;
  // At most two shifts overlap the support for any t.
  const double y = std::log2(t);
  const int j0 = static_cast<int>(std::floor(y));
  double denom = 0.0;
  for (int j = j0 - 1; j <= j0 + 2; ++j) denom += dyadic_bump(std::ldexp(t, -j));
  return h / denom;
}

double smoothed_multiplier(int level, double lambda) {
  const double lo = std::ldexp(1.0, level);
  if (lambda < lo) return 1.0;
  if (lambda >= 2.0 * lo) return 0.0;
  return dyadic_rho(lambda / lo);
}

SmoothedProjector smoothed_projector(int level, const EigenBasis& basis) {
  if (level < 0) throw ConfigError("galerkin level must be non-negative");
  SmoothedProjector p{level, std::vector<double>(basis.size())};
  const auto s = basis.s_eigs();
  for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] = smoothed_multiplier(level, s[i]);
  return p;
}

SpectralField apply_weights(const SpectralField& u, std::span<const double> weights) {
  if (weights.size() != u.size()) throw ShapeError("weight vector does not match field");
  SpectralField out = u;
  apply_weights_inplace(out.coeffs, weights);
  return out;
}

void apply_weights_inplace(std::span<cplx> coeffs, std::span<const double> weights) {
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] *= weights[i];
}

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity::Nonlinearity(const EigenBasis& basis, double alpha)
    : alpha_(alpha), exact_(false), grid_(basis) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("alpha must exceed 1");
  const int q = dealias_factor(basis, alpha, exact_);
  if (q != basis.oversample()) grid_ = basis.refined(q);
}

void Nonlinearity::apply(std::span<const cplx> coeffs, std::span<cplx> out,
                         std::span<cplx> grid_buf) const {
  grid_.synthesize(coeffs, grid_buf);
  const double e = alpha_ - 1.0;
  const bool cubic = alpha_ == 3.0;
  for (auto& z : grid_buf) {
    const double r2 = std::norm(z);
    z *= cubic ? r2 : std::pow(r2, 0.5 * e);
  }
  grid_.analyze(grid_buf, out);
}

SpectralField Nonlinearity::apply(const SpectralField& u) const {
  grid_.check(u);
  SpectralField out = grid_.zero_field();
  std::vector<cplx> buf(grid_.grid_size());
  apply(u.coeffs, out.coeffs, buf);
  return out;
}

double Nonlinearity::l_alpha1_norm(const SpectralField& u) const {
  return lp_norm(u, grid_, alpha_ + 1.0);
}

double Nonlinearity::antiderivative(const SpectralField& u) const {
  return std::pow(l_alpha1_norm(u), alpha_ + 1.0) / (alpha_ + 1.0);
}

double Nonlinearity::dual_norm(const SpectralField& u) const {
  const auto grid = grid_.from_spectral(u);
  const double q = (alpha_ + 1.0) / alpha_;
  double s = 0.0;
  for (const auto& z : grid) {
    const double f = std::pow(std::abs(z), alpha_);  // |F(u)| pointwise
    s += std::pow(f, q);
  }
  return std::pow(s * grid_.quadrature_weight(), 1.0 / q);
}

double Nonlinearity::sup_norm(const SpectralField& u) const { return snls::sup_norm(u, grid_); }

SpectralField apply_F(const SpectralField& u, const Nonlinearity& f) { return f.apply(u); }

double antiderivative_F(const SpectralField& u, const Nonlinearity& f) {
  return f.antiderivative(u);
}

// ---------------------------------------------------------------------------
// Linear noise B

LinearNoiseB make_linear_noise(const EigenBasis& basis, const std::vector<Profile>& profiles) {
  LinearNoiseB b;
  const auto a = basis.a_eigs();
  for (const auto& p : profiles) {
    std::vector<double> sym(basis.size());
    double mx = 0.0;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      sym[i] = p(a[i]);
      mx = std::max(mx, std::abs(sym[i]));
    }
    b.norm_sq_H += mx * mx;
    const double lp = std::max(mx, std::abs(p.limit()) + kernel_l1_norm(p, basis.dim()));
    b.norm_sq_Lp += lp * lp;
    b.multipliers.push_back(std::move(sym));
    b.profiles.push_back(p.text());
  }
  b.norm_sq_V = b.norm_sq_H;
  return b;
}

std::vector<double> stratonovich_correction(const LinearNoiseB& b,
                                            std::optional<std::span<const double>> weights) {
  const std::size_t n = b.multipliers.empty() ? (weights ? weights->size() : 0)
                                              : b.multipliers.front().size();
  std::vector<double> diag(n, 0.0);
  for (const auto& sym : b.multipliers) {
    for (std::size_t k = 0; k < n; ++k) {
      double e = sym[k];
      if (weights) e *= (*weights)[k] * (*weights)[k];
      diag[k] -= 0.5 * e * e;
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// State noise G

std::string_view to_string(GVariant v) {
  switch (v) {
    case GVariant::none: return "none";
    case GVariant::additive: return "additive";
    case GVariant::linear_diagonal: return "linear_diagonal";
    case GVariant::bounded_nemytskii: return "bounded_nemytskii";
  }
  return "?";
}

GVariant parse_g_variant(std::string_view name) {
  for (auto v : {GVariant::none, GVariant::additive, GVariant::linear_diagonal,
                 GVariant::bounded_nemytskii})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown noise.G.variant '" + std::string(name) + "'");
}

std::size_t StateNoiseG::count() const {
  switch (variant_) {
    case GVariant::none: return 0;
    case GVariant::linear_diagonal: return gammas_.size();
    default: return g_.size();
  }
}

StateNoiseG StateNoiseG::linear_diagonal(std::vector<double> gammas) {
  StateNoiseG g;
  g.variant_ = GVariant::linear_diagonal;
  double s = 0.0;
  for (double x : gammas) s += x * x;
  g.gammas_ = std::move(gammas);
  const double c = std::sqrt(s);
  g.constants_.C1t = g.constants_.C2t = g.constants_.C3t = c;
  g.constants_.lipschitz = c;
  return g;
}

StateNoiseG StateNoiseG::additive(std::vector<SpectralField> fields, const EigenBasis& basis,
                                  double alpha) {
  StateNoiseG g;
  g.variant_ = GVariant::additive;
  double h = 0.0, v = 0.0, l = 0.0;
  for (auto& f : fields) {
    basis.check(f);
    h += h_norm_sq(f);
    v += v_norm_sq(f, basis);
    const double lp = lp_norm(f, basis, alpha + 1.0);
    l += lp * lp;
    g.g_.push_back(std::move(f.coeffs));
  }
  g.constants_.C1 = std::sqrt(h);
  g.constants_.C2 = std::sqrt(v);
  g.constants_.C3 = std::sqrt(l);
  return g;
}

StateNoiseG StateNoiseG::make(GVariant variant, std::string_view params, const EigenBasis& basis,
                              double alpha) {
  auto kv = parse_params(params);
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto reject_leftovers = [&] {
    if (!kv.empty())
      throw ConfigError("noise.G.params: unknown entry '" + kv.begin()->first + "' for variant " +
                        std::string(to_string(variant)));
  };
  // g_m = profile(a_k) h_k over the first `count` modes ordered by s_k.
  auto mode_fields = [&] {
    const auto order = modes_by_s(basis);
    std::size_t count = order.size();
    if (auto c = take("count"); c && *c != "all") {
      const double x = parse_number(*c, "noise.G.params count");
      if (x < 1 || x != std::floor(x) || x > static_cast<double>(order.size()))
        throw ConfigError("noise.G.params count must be an integer in [1, " +
                          std::to_string(order.size()) + "]");
      count = static_cast<std::size_t>(x);
    }
    const auto prof_text = take("profile");
    if (!prof_text) throw ConfigError("noise.G.params needs profile=...");
    const Profile prof = Profile::parse(*prof_text);
    std::vector<SpectralField> fields;
    std::vector<std::size_t> modes;
    for (std::size_t m = 0; m < count; ++m) {
      SpectralField f = basis.zero_field();
      f.coeffs[order[m]] = prof(basis.a_eigs()[order[m]]);
      fields.push_back(std::move(f));
      modes.push_back(order[m]);
    }
    return std::pair{std::move(fields), std::move(modes)};
  };

  switch (variant) {
    case GVariant::none:
      reject_leftovers();
      return StateNoiseG{};
    case GVariant::linear_diagonal: {
      auto gm = take("gamma");
      if (!gm) throw ConfigError("noise.G.params needs gamma=g1,g2,... for linear_diagonal");
      reject_leftovers();
      return linear_diagonal(parse_list(*gm, "gamma"));
    }
    case GVariant::additive: {
      auto [fields, modes] = mode_fields();
      reject_leftovers();
      return additive(std::move(fields), basis, alpha);
    }
    case GVariant::bounded_nemytskii: {
      auto [fields, modes] = mode_fields();
      double scale = 1.0;
      if (auto s = take("scale")) scale = parse_number(*s, "noise.G.params scale");
      if (scale < 0) throw ConfigError("noise.G.params scale must be non-negative");
      reject_leftovers();
      StateNoiseG g;
      g.variant_ = GVariant::bounded_nemytskii;
      g.scale_ = scale;
      // sigma(z) = scale z / sqrt(1 + |z|^2): |sigma| <= scale, Lip(sigma) <= scale.
      double h = 0.0, v = 0.0, l = 0.0, sup = 0.0;
      for (std::size_t m = 0; m < fields.size(); ++m) {
        const auto& f = fields[m];
        h += h_norm_sq(f);
        v += v_norm_sq(f, basis);
        const double lp = lp_norm(f, basis, alpha + 1.0);
        l += lp * lp;
        const double gs = std::abs(f.coeffs[modes[m]]) * basis.eigenfunction_sup(modes[m]);
        sup += gs * gs;
        g.g_.push_back(basis.from_spectral(f));
      }
      g.constants_.C1 = scale * std::sqrt(h);
      g.constants_.C2 = scale * std::sqrt(v);
      g.constants_.C2t = scale * std::sqrt(sup);
      g.constants_.C3 = scale * std::sqrt(l);
      g.constants_.lipschitz = scale * std::sqrt(sup);
      return g;
    }
  }
  throw ConfigError("unsupported noise.G.variant");
}

double StateNoiseG::apply(std::span<const cplx> coeffs, std::vector<std::vector<cplx>>& out,
                          const EigenBasis& basis, std::span<cplx> grid_a,
                          std::span<cplx> grid_b) const {
  const std::size_t M = count();
  out.resize(M);
  double hs = 0.0;
  for (auto& o : out) o.resize(coeffs.size());
  switch (variant_) {
    case GVariant::none:
      return 0.0;
    case GVariant::additive:
      for (std::size_t m = 0; m < M; ++m) {
        std::copy(g_[m].begin(), g_[m].end(), out[m].begin());
        for (const auto& c : out[m]) hs += std::norm(c);
      }
      return hs;
    case GVariant::linear_diagonal: {
      double u2 = 0.0;
      for (const auto& c : coeffs) u2 += std::norm(c);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < coeffs.size(); ++i) out[m][i] = gammas_[m] * coeffs[i];
        hs += gammas_[m] * gammas_[m] * u2;
      }
      return hs;
    }
    case GVariant::bounded_nemytskii: {
      basis.synthesize(coeffs, grid_a);
      for (auto& z : grid_a) z *= scale_ / std::sqrt(1.0 + std::norm(z));
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t j = 0; j < grid_b.size(); ++j) grid_b[j] = g_[m][j] * grid_a[j];
        basis.analyze(grid_b, out[m]);
        for (const auto& c : out[m]) hs += std::norm(c);
      }
      return hs;
    }
  }
  return hs;
}

GOutput StateNoiseG::apply(const SpectralField& u, const EigenBasis& basis) const {
  basis.check(u);
  std::vector<std::vector<cplx>> raw;
  std::vector<cplx> ga(basis.grid_size()), gb(basis.grid_size());
  GOutput out;
  out.hs_norm_sq = apply(u.coeffs, raw, basis, ga, gb);
  for (auto& r : raw) out.fields.push_back(SpectralField{std::move(r), u.basis_tag});
  return out;
}

GOutput apply_G(const SpectralField& u, const StateNoiseG& g, const EigenBasis& basis) {
  return g.apply(u, basis);
}

}  // namespace snls
