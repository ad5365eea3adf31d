// snls <mode> --config <path> --out <dir> [--seed N] [--paths N]

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snls/snls.h"

namespace {

std::string last_error() {
  std::vector<char> buf(snls_last_error(nullptr, 0) + 1);
  snls_last_error(buf.data(), buf.size());
  return buf.data();
}

int exit_code(snls_status s) {
  switch (s) {
    case SNLS_OK: return 0;
    case SNLS_ERR_CHECKS_FAILED: return 1;
    case SNLS_ERR_CONFIG:
    case SNLS_ERR_ARGUMENT: return 2;
    case SNLS_ERR_BLOWUP: return 3;
    case SNLS_ERR_IO: return 4;
    default: return 5;
  }
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin simulator for the damped stochastic nonlinear Schroedinger equation"};
  app.set_version_flag("--version", std::string(snls_version()));

  std::string mode, config_path, out_dir;
  std::optional<std::uint64_t> seed, paths;
  bool quiet = false;
  app.add_option("mode", mode, "simulate | ensemble | invariant | verify")
      ->required()
      ->check(CLI::IsMember({"simulate", "ensemble", "invariant", "verify"}));
  app.add_option("--config", config_path, "key=value configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--paths", paths, "override ensemble.paths")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "do not echo the constants report");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors share the configuration code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  snls_config* cfg = nullptr;
  snls_status s = snls_config_load(config_path.c_str(), &cfg);
  if (s != SNLS_OK) {
    std::cerr << "error: " << last_error() << "\n";
    return exit_code(s);
  }
  if (seed) snls_config_set_seed(cfg, *seed);
  if (paths) snls_config_set_paths(cfg, *paths);

  if (!quiet) {
    std::size_t needed = 0;
    s = snls_config_report(cfg, nullptr, 0, &needed);
    if (s != SNLS_OK) {
      std::cerr << "error: " << last_error() << "\n";
      snls_config_free(cfg);
      return exit_code(s);
    }
    std::vector<char> text(needed);
    snls_config_report(cfg, text.data(), text.size(), nullptr);
    char sum[32];
    snls_config_checksum(cfg, sum, sizeof sum);
    std::cout << "config_checksum = " << sum << "\n" << text.data() << std::flush;
  }

  s = snls_run(mode.c_str(), cfg, out_dir.c_str(), log_line, nullptr);
  snls_config_free(cfg);
  if (s != SNLS_OK && s != SNLS_ERR_CHECKS_FAILED) std::cerr << "error: " << last_error() << "\n";
  return exit_code(s);
}
