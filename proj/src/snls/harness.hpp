#pragma once

// Run orchestration for the four CLI modes and the verify suite.

#include <iosfwd>
#include <string>
#include <vector>

#include "snls/config.hpp"
#include "snls/dynamics.hpp"

namespace snls {

inline constexpr const char* kToolVersion = "0.1.0";

// Low-band datum: modes with |k_i| <= bandwidth, coefficient
// e^{i(0.7 k1 + 1.3 k2 + 0.3)} / (1 + a_k), rescaled to the requested mass.
SpectralField make_initial(const EigenBasis& basis, double mass, int bandwidth);

struct CheckResult {
  std::string name;
  std::string ref;  // the identity or bound being checked
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> verify_suite(const RunConfig& cfg);

// Runs one mode, writing its files into out_dir (created if missing).
// Returns the process exit status: 0 success, 1 failed checks, 2 config
// error, 3 blow-up, 4 I/O error.
int run_mode(const std::string& mode, const RunConfig& cfg, const std::string& out_dir,
             std::ostream& log);

}  // namespace snls
