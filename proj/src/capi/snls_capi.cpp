#include "snls/snls.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "snls/config.hpp"
#include "snls/dynamics.hpp"
#include "snls/errors.hpp"
#include "snls/harness.hpp"

struct snls_config {
  snls::RunConfig rc;
};

struct snls_model {
  snls::RunConfig rc;
  std::unique_ptr<snls::Model> model;
};

struct snls_trajectory {
  snls::TrajectoryRecord rec;
};

namespace {

thread_local std::string g_last_error;

snls_status fail(snls_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps the library exceptions onto status codes.
template <class Fn>
snls_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const snls::BlowUpError& e) {
    return fail(SNLS_ERR_BLOWUP, e.what());
  } catch (const snls::ConfigError& e) {
    return fail(SNLS_ERR_CONFIG, e.what());
  } catch (const snls::ShapeError& e) {
    return fail(SNLS_ERR_SHAPE, e.what());
  } catch (const snls::IoError& e) {
    return fail(SNLS_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SNLS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SNLS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SNLS_ERR_INTERNAL, "unknown exception");
  }
}

snls_sample to_c(const snls::ObservableSample& s) {
  return {s.t, s.mass, s.energy, s.v_norm_sq, s.z, s.l_alpha1_norm, s.hs_norm_sq};
}

// Forwards complete lines of a stream to the log callback.
class CallbackBuf : public std::stringbuf {
 public:
  CallbackBuf(snls_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~CallbackBuf() override { flush_lines(true); }

  const std::string& last_line() const { return last_; }

  int sync() override {
    flush_lines(false);
    return 0;
  }

 protected:
  int_type overflow(int_type ch) override {
    const auto r = std::stringbuf::overflow(ch);
    if (ch == '\n') flush_lines(false);
    return r;
  }

 private:
  void flush_lines(bool all) {
    std::string s = str();
    std::size_t start = 0, nl;
    while ((nl = s.find('\n', start)) != std::string::npos) {
      emit(s.substr(start, nl - start));
      start = nl + 1;
    }
    std::string rest = s.substr(start);
    if (all && !rest.empty()) {
      emit(rest);
      rest.clear();
    }
    str(rest);
    seekoff(0, std::ios_base::end, std::ios_base::out);
  }

  void emit(const std::string& line) {
    last_ = line;
    if (fn_) fn_(line.c_str(), user_);
  }

  snls_log_fn fn_;
  void* user_;
  std::string last_;
};

}  // namespace

extern "C" {

SNLS_API uint32_t snls_abi_version(void) { return SNLS_ABI_VERSION; }

SNLS_API const char* snls_version(void) { return snls::kToolVersion; }

SNLS_API const char* snls_status_string(snls_status status) {
  switch (status) {
    case SNLS_OK: return "ok";
    case SNLS_ERR_ARGUMENT: return "invalid argument";
    case SNLS_ERR_CONFIG: return "configuration error";
    case SNLS_ERR_SHAPE: return "shape mismatch";
    case SNLS_ERR_BLOWUP: return "blow-up guard tripped";
    case SNLS_ERR_IO: return "i/o error";
    case SNLS_ERR_CHECKS_FAILED: return "verification checks failed";
    case SNLS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

SNLS_API size_t snls_last_error(char* buffer, size_t size) {
  if (buffer && size > 0) {
    const std::size_t n = std::min(size - 1, g_last_error.size());
    std::memcpy(buffer, g_last_error.data(), n);
    buffer[n] = '\0';
  }
  return g_last_error.size();
}

SNLS_API snls_status snls_config_parse(const char* text, snls_config** out) {
  if (!text || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<snls_config>();
    c->rc = snls::parse_config(text);
    *out = c.release();
    return SNLS_OK;
  });
}

SNLS_API snls_status snls_config_load(const char* path, snls_config** out) {
  if (!path || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<snls_config>();
    c->rc = snls::load_config(path);
    *out = c.release();
    return SNLS_OK;
  });
}

SNLS_API void snls_config_free(snls_config* cfg) { delete cfg; }

SNLS_API snls_status snls_config_set_seed(snls_config* cfg, uint64_t seed) {
  if (!cfg) return fail(SNLS_ERR_ARGUMENT, "null config");
  cfg->rc.sde.seed = seed;
  return SNLS_OK;
}

SNLS_API snls_status snls_config_set_paths(snls_config* cfg, uint64_t paths) {
  if (!cfg) return fail(SNLS_ERR_ARGUMENT, "null config");
  if (paths < 1) return fail(SNLS_ERR_CONFIG, "ensemble.paths must be at least 1");
  cfg->rc.sde.paths = static_cast<std::size_t>(paths);
  return SNLS_OK;
}

SNLS_API snls_status snls_config_get_seed(const snls_config* cfg, uint64_t* seed) {
  if (!cfg || !seed) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *seed = cfg->rc.sde.seed;
  return SNLS_OK;
}

SNLS_API snls_status snls_config_get_paths(const snls_config* cfg, uint64_t* paths) {
  if (!cfg || !paths) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *paths = cfg->rc.sde.paths;
  return SNLS_OK;
}

SNLS_API snls_status snls_config_checksum(const snls_config* cfg, char* buffer, size_t size) {
  if (!cfg || !buffer) return fail(SNLS_ERR_ARGUMENT, "null argument");
  const auto& s = cfg->rc.checksum;
  if (size < s.size() + 1) return fail(SNLS_ERR_ARGUMENT, "checksum buffer too small");
  std::memcpy(buffer, s.c_str(), s.size() + 1);
  return SNLS_OK;
}

SNLS_API snls_status snls_config_report(const snls_config* cfg, char* buffer, size_t size,
                                        size_t* needed) {
  if (!cfg) return fail(SNLS_ERR_ARGUMENT, "null config");
  return guarded([&] {
    const snls::Model model(cfg->rc.sde);
    const std::string text = snls::format_report(snls::constants_report(model));
    if (needed) *needed = text.size() + 1;
    if (buffer && size > 0) {
      const std::size_t n = std::min(size - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
    return SNLS_OK;
  });
}

SNLS_API snls_status snls_model_create(const snls_config* cfg, snls_model** out) {
  if (!cfg || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<snls_model>();
    m->rc = cfg->rc;
    m->model = std::make_unique<snls::Model>(m->rc.sde);
    *out = m.release();
    return SNLS_OK;
  });
}

SNLS_API void snls_model_free(snls_model* model) { delete model; }

SNLS_API size_t snls_model_mode_count(const snls_model* model) {
  return model ? model->model->basis().size() : 0;
}

SNLS_API int snls_model_level(const snls_model* model) {
  return model ? model->model->level() : -1;
}

SNLS_API snls_status snls_simulate(const snls_model* model, uint64_t path, snls_trajectory** out) {
  if (!model || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto& run = model->rc.run;
    const auto u0 =
        snls::make_initial(model->model->basis(), run.initial_mass, run.initial_bandwidth);
    snls::SimulateOptions o;
    o.path = path;
    auto t = std::make_unique<snls_trajectory>();
    t->rec = snls::simulate(*model->model, u0, o);
    *out = t.release();
    return SNLS_OK;
  });
}

SNLS_API snls_status snls_simulate_from(const snls_model* model, const double* re_im,
                                        size_t n_modes, uint64_t path, snls_trajectory** out) {
  if (!model || !re_im || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  const auto& basis = model->model->basis();
  if (n_modes != basis.size()) {
    std::ostringstream os;
    os << "initial field has " << n_modes << " modes, basis has " << basis.size();
    return fail(SNLS_ERR_SHAPE, os.str());
  }
  return guarded([&] {
    snls::SpectralField u0 = basis.zero_field();
    for (std::size_t i = 0; i < n_modes; ++i) u0.coeffs[i] = {re_im[2 * i], re_im[2 * i + 1]};
    snls::SimulateOptions o;
    o.path = path;
    auto t = std::make_unique<snls_trajectory>();
    t->rec = snls::simulate(*model->model, u0, o);
    *out = t.release();
    return SNLS_OK;
  });
}

SNLS_API void snls_trajectory_free(snls_trajectory* traj) { delete traj; }

SNLS_API size_t snls_trajectory_length(const snls_trajectory* traj) {
  return traj ? traj->rec.samples.size() : 0;
}

SNLS_API snls_status snls_trajectory_sample(const snls_trajectory* traj, size_t index,
                                            snls_sample* out) {
  if (!traj || !out) return fail(SNLS_ERR_ARGUMENT, "null argument");
  if (index >= traj->rec.samples.size()) return fail(SNLS_ERR_ARGUMENT, "sample index out of range");
  *out = to_c(traj->rec.samples[index]);
  return SNLS_OK;
}

SNLS_API snls_status snls_trajectory_final_state(const snls_trajectory* traj, double* re_im,
                                                 size_t n_modes) {
  if (!traj || !re_im) return fail(SNLS_ERR_ARGUMENT, "null argument");
  const auto& u = traj->rec.final_state;
  if (n_modes != u.size()) return fail(SNLS_ERR_SHAPE, "mode count mismatch");
  for (std::size_t i = 0; i < n_modes; ++i) {
    re_im[2 * i] = u.coeffs[i].real();
    re_im[2 * i + 1] = u.coeffs[i].imag();
  }
  return SNLS_OK;
}

SNLS_API snls_status snls_run(const char* mode, const snls_config* cfg, const char* out_dir,
                              snls_log_fn log, void* user) {
  if (!mode || !cfg || !out_dir) return fail(SNLS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    CallbackBuf buf(log, user);
    std::ostream os(&buf);
    const int code = snls::run_mode(mode, cfg->rc, out_dir, os);
    os.flush();
    const std::string& msg = buf.last_line();
    switch (code) {
      case 0: return SNLS_OK;
      case 1: return fail(SNLS_ERR_CHECKS_FAILED, msg);
      case 2: return fail(SNLS_ERR_CONFIG, msg);
      case 3: return fail(SNLS_ERR_BLOWUP, msg);
      case 4: return fail(SNLS_ERR_IO, msg);
      default: return fail(SNLS_ERR_INTERNAL, "unexpected exit status");
    }
  });
}

}  // extern "C"
