#include "snls/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "snls/errors.hpp"

namespace snls {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void fail(const std::string& key, int line, const std::string& what) {
  std::ostringstream os;
  os << "config line " << line << ": " << key << ": " << what;
  throw ConfigError(os.str());
}

double to_double(const std::string& key, const Entry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    fail(key, e.line, "expected a finite number, got '" + e.value + "'");
  return v;
}

long long to_int(const std::string& key, const Entry& e) {
  long long v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end) fail(key, e.line, "expected an integer, got '" + e.value + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, const Entry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || p != end)
    fail(key, e.line, "expected a non-negative integer, got '" + e.value + "'");
  return v;
}

bool to_bool(const std::string& key, const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "off") return false;
  fail(key, e.line, "expected true or false, got '" + e.value + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  for (const auto& item : split(e.value, ',')) out.push_back(to_double(key, Entry{item, e.line}));
  if (out.empty()) fail(key, e.line, "expected a comma-separated list of numbers");
  return out;
}

const std::set<std::string> kKeys = {
    "domain.kind",        "domain.modes_per_axis", "domain.oversample",  "galerkin.level",
    "alpha",              "beta",                  "scheme",             "dt",
    "t_final",            "snapshot_stride",       "seed",               "ensemble.paths",
    "nonlinearity.enabled", "noise.B.count",       "noise.G.variant",    "noise.G.params",
    "run.burn_in_fraction", "run.radii",           "run.lambda",         "run.initial_scales",
    "run.functionals",    "run.snapshots",         "initial.mass",       "initial.bandwidth",
};

bool is_b_profile_key(const std::string& key, int& m) {
  static const std::string pre = "noise.B.", post = ".profile";
  if (key.size() <= pre.size() + post.size() || key.rfind(pre, 0) != 0 ||
      key.compare(key.size() - post.size(), post.size(), post) != 0)
    return false;
  const std::string mid = key.substr(pre.size(), key.size() - pre.size() - post.size());
  auto [p, ec] = std::from_chars(mid.data(), mid.data() + mid.size(), m);
  return ec == std::errc() && p == mid.data() + mid.size();
}

}  // namespace

std::string config_checksum(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::map<int, Entry> profiles;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "config line " << line << ": expected key=value, got '" << body << "'";
      throw ConfigError(os.str());
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail("<empty>", line, "missing key");
    int m = 0;
    const bool is_profile = is_b_profile_key(key, m);
    if (!is_profile && !kKeys.count(key)) fail(key, line, "unknown key");
    if (entries.count(key)) {
      std::ostringstream os;
      os << "duplicate key (first set on line " << entries[key].line << ")";
      fail(key, line, os.str());
    }
    entries[key] = Entry{value, line};
    if (is_profile) profiles[m] = Entry{value, line};
  }

  RunConfig rc;
  rc.text = std::string(text);
  rc.checksum = config_checksum(text);
  SdeConfig& c = rc.sde;
  RunSettings& r = rc.run;

  auto has = [&](const char* k) { return entries.count(k) > 0; };
  auto get = [&](const char* k) -> const Entry& { return entries.at(k); };

  auto wrap = [&](const char* k, auto&& fn) {
    if (!has(k)) return;
    try {
      fn(get(k));
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("config line", 0) == 0) throw;
      fail(k, get(k).line, msg);
    }
  };

  wrap("domain.kind", [&](const Entry& e) { c.domain = parse_domain_kind(e.value); });
  wrap("domain.modes_per_axis", [&](const Entry& e) {
    const auto v = to_int("domain.modes_per_axis", e);
    if (v < 1 || v > 4096) fail("domain.modes_per_axis", e.line, "must lie in [1, 4096]");
    c.modes_per_axis = static_cast<int>(v);
  });
  wrap("domain.oversample", [&](const Entry& e) {
    const auto v = to_int("domain.oversample", e);
    if (v < 2 || v > 16) fail("domain.oversample", e.line, "must lie in [2, 16]");
    c.oversample = static_cast<int>(v);
  });
  wrap("galerkin.level", [&](const Entry& e) {
    if (e.value == "auto") {
      c.galerkin_level = -1;
      return;
    }
    const auto v = to_int("galerkin.level", e);
    if (v < 0 || v > 60) fail("galerkin.level", e.line, "must be 'auto' or an integer in [0, 60]");
    c.galerkin_level = static_cast<int>(v);
  });
  wrap("alpha", [&](const Entry& e) {
    c.alpha = to_double("alpha", e);
    if (!(c.alpha > 1.0)) fail("alpha", e.line, "alpha must exceed 1");
  });
  wrap("beta", [&](const Entry& e) { c.beta = to_double("beta", e); });
  wrap("scheme", [&](const Entry& e) { c.scheme = parse_scheme(e.value); });
  wrap("dt", [&](const Entry& e) {
    c.dt = to_double("dt", e);
    if (!(c.dt > 0.0)) fail("dt", e.line, "dt must be positive");
  });
  wrap("t_final", [&](const Entry& e) {
    c.t_final = to_double("t_final", e);
    if (!(c.t_final >= 0.0)) fail("t_final", e.line, "t_final must be non-negative");
  });
  wrap("snapshot_stride", [&](const Entry& e) {
    const auto v = to_int("snapshot_stride", e);
    if (v < 1) fail("snapshot_stride", e.line, "must be at least 1");
    c.snapshot_stride = static_cast<int>(v);
  });
  wrap("seed", [&](const Entry& e) { c.seed = to_u64("seed", e); });
  wrap("ensemble.paths", [&](const Entry& e) {
    const auto v = to_int("ensemble.paths", e);
    if (v < 1) fail("ensemble.paths", e.line, "must be at least 1");
    c.paths = static_cast<std::size_t>(v);
  });
  wrap("nonlinearity.enabled",
       [&](const Entry& e) { c.nonlinearity_enabled = to_bool("nonlinearity.enabled", e); });

  std::size_t b_count = 0;
  wrap("noise.B.count", [&](const Entry& e) {
    const auto v = to_int("noise.B.count", e);
    if (v < 0 || v > 4096) fail("noise.B.count", e.line, "must lie in [0, 4096]");
    b_count = static_cast<std::size_t>(v);
  });
  for (const auto& [m, e] : profiles) {
    const std::string key = "noise.B." + std::to_string(m) + ".profile";
    if (m < 1 || static_cast<std::size_t>(m) > b_count) {
      std::ostringstream os;
      os << "mode index must lie in [1, noise.B.count = " << b_count << "]";
      fail(key, e.line, os.str());
    }
    try {
      Profile::parse(e.value);
    } catch (const ConfigError& err) {
      fail(key, e.line, err.what());
    }
  }
  for (std::size_t m = 1; m <= b_count; ++m) {
    auto it = profiles.find(static_cast<int>(m));
    if (it == profiles.end()) {
      const int at = has("noise.B.count") ? get("noise.B.count").line : 0;
      fail("noise.B." + std::to_string(m) + ".profile", at, "missing (noise.B.count requires it)");
    }
    c.b_profiles.push_back(it->second.value);
  }
  wrap("noise.G.variant", [&](const Entry& e) { c.g_variant = parse_g_variant(e.value); });
  wrap("noise.G.params", [&](const Entry& e) { c.g_params = e.value; });

  wrap("run.burn_in_fraction", [&](const Entry& e) {
    r.burn_in_fraction = to_double("run.burn_in_fraction", e);
    if (!(r.burn_in_fraction >= 0.0 && r.burn_in_fraction < 1.0))
      fail("run.burn_in_fraction", e.line, "must lie in [0, 1)");
  });
  wrap("run.radii", [&](const Entry& e) {
    r.radii = to_list("run.radii", e);
    for (std::size_t i = 1; i < r.radii.size(); ++i)
      if (r.radii[i] < r.radii[i - 1]) fail("run.radii", e.line, "radii must be ascending");
  });
  wrap("run.lambda", [&](const Entry& e) { r.lambda = to_double("run.lambda", e); });
  wrap("run.initial_scales", [&](const Entry& e) {
    r.initial_scales = to_list("run.initial_scales", e);
    for (double s : r.initial_scales)
      if (!(s > 0.0)) fail("run.initial_scales", e.line, "scales must be positive");
  });
  wrap("run.functionals", [&](const Entry& e) {
    r.functionals = split(e.value, ',');
    if (r.functionals.empty()) fail("run.functionals", e.line, "expected at least one functional");
  });
  wrap("run.snapshots", [&](const Entry& e) { r.write_snapshots = to_bool("run.snapshots", e); });
  wrap("initial.mass", [&](const Entry& e) {
    r.initial_mass = to_double("initial.mass", e);
    if (!(r.initial_mass >= 0.0)) fail("initial.mass", e.line, "must be non-negative");
  });
  wrap("initial.bandwidth", [&](const Entry& e) {
    const auto v = to_int("initial.bandwidth", e);
    if (v < 0) fail("initial.bandwidth", e.line, "must be non-negative");
    r.initial_bandwidth = static_cast<int>(v);
  });

  if (c.t_final > 0.0 && c.dt > c.t_final) {
    const int at = has("dt") ? get("dt").line : 0;
    fail("dt", at, "dt must not exceed t_final");
  }
  c.validate();
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

ConstantsReport constants_report(const Model& model) {
  ConstantsReport r;
  const auto& b = model.noise_b();
  r.b_norm_sq_H = b.norm_sq_H;
  r.b_norm_sq_V = b.norm_sq_V;
  r.b_norm_sq_Lp = b.norm_sq_Lp;
  r.g = model.noise_g().constants();
  r.alpha = model.config().alpha;
  r.beta = model.config().beta;
  const double first = r.g.C1t * r.g.C1t + r.g.C2t * r.g.C2t + r.b_norm_sq_V;
  const double second = 0.5 * (r.alpha + 1.0) * r.b_norm_sq_Lp + r.alpha * r.g.C3t * r.g.C3t;
  r.beta_threshold = std::max(first, second);
  r.beta_condition = r.beta > r.beta_threshold;
  r.delta0_regime = r.g.C1 == 0.0 && r.beta > 0.5 * r.g.C1t * r.g.C1t;
  return r;
}

std::string format_report(const ConstantsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "alpha = " << r.alpha << "\n"
     << "beta = " << r.beta << "\n"
     << "B.norm_sq_H = " << r.b_norm_sq_H << "\n"
     << "B.norm_sq_V = " << r.b_norm_sq_V << "\n"
     << "B.norm_sq_Lp = " << r.b_norm_sq_Lp << "\n"
     << "G.C1 = " << r.g.C1 << "\n"
     << "G.C1t = " << r.g.C1t << "\n"
     << "G.C2 = " << r.g.C2 << "\n"
     << "G.C2t = " << r.g.C2t << "\n"
     << "G.C3 = " << r.g.C3 << "\n"
     << "G.C3t = " << r.g.C3t << "\n"
     << "G.L = " << r.g.lipschitz << "\n"
     << "beta_threshold = " << r.beta_threshold << "\n"
     << "beta_condition = " << (r.beta_condition ? "true" : "false") << "\n"
     << "delta0_regime = " << (r.delta0_regime ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace snls
