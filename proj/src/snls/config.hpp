#pragma once

// Flat key=value run configuration.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "snls/dynamics.hpp"

namespace snls {

struct RunSettings {
  double burn_in_fraction = 0.2;
  std::vector<double> radii{0.5, 1.0, 2.0, 4.0, 8.0};
  double lambda = 0.0;
  // Initial datum: low band |k|_inf <= bandwidth with fixed phases, scaled to mass.
  double initial_mass = 1.0;
  int initial_bandwidth = 2;
  // Mass multipliers of the initial data used by the invariant mode.
  std::vector<double> initial_scales{1.0, 0.25, 4.0};
  std::vector<std::string> functionals{"min_mass_1", "tanh_v_norm_sq"};
  bool write_snapshots = false;
};

struct RunConfig {
  SdeConfig sde;
  RunSettings run;
  std::string text;      // raw bytes as parsed
  std::string checksum;  // FNV-1a 64 of text, hex
};

// Throws ConfigError naming the key, the line and the violated constraint.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

std::string config_checksum(std::string_view text);

// Constants of B and G and the damping thresholds they imply.
struct ConstantsReport {
  double b_norm_sq_H = 0.0;
  double b_norm_sq_V = 0.0;
  double b_norm_sq_Lp = 0.0;
  GConstants g;
  // max(C1t^2 + C2t^2 + |B|_V^2, (alpha+1)/2 |B|_Lp^2 + alpha C3t^2)
  double beta_threshold = 0.0;
  bool beta_condition = false;
  // C1 = 0 and beta > C1t^2 / 2
  bool delta0_regime = false;
  double beta = 0.0;
  double alpha = 0.0;
};

ConstantsReport constants_report(const Model& model);
// "key = value" lines.
std::string format_report(const ConstantsReport& r);

}  // namespace snls
