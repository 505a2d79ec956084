#include "kinlab/kinlab.h"

#include <cstring>
#include <string>

#include "kinlab/config.hpp"
#include "kinlab/experiments.hpp"
#include "kinlab/model.hpp"
#include "kinlab/noise.hpp"

struct kinlab_config {
  kinlab::RunConfig cfg;
};

struct kinlab_noise {
  kinlab::NoisePath path;
};

namespace {

thread_local std::string last_message;
thread_local std::string last_json = "{}";
thread_local long long last_step = -1;

void clear_error() {
  last_message.clear();
  last_json = "{}";
  last_step = -1;
}

kinlab_status status_for(const std::exception& e) {
  if (dynamic_cast<const kinlab::BlowUpError*>(&e)) return KINLAB_ERR_BLOWUP;
  if (const auto* k = dynamic_cast<const kinlab::Error*>(&e)) {
    switch (k->kind()) {
      case kinlab::ErrorKind::Io: return KINLAB_ERR_IO;
      case kinlab::ErrorKind::Domain: return KINLAB_ERR_DOMAIN;
      default: return KINLAB_ERR_CONFIG;
    }
  }
  return KINLAB_ERR_INTERNAL;
}

template <class F>
kinlab_status guarded(F&& f) {
  clear_error();
  try {
    f();
    return KINLAB_OK;
  } catch (const std::exception& e) {
    last_message = e.what();
    last_json = kinlab::error_json(e).dump();
    if (const auto* b = dynamic_cast<const kinlab::BlowUpError*>(&e)) last_step = static_cast<long long>(b->step());
    return status_for(e);
  } catch (...) {
    last_message = "unknown failure";
    last_json = R"({"error":"internal","message":"unknown failure"})";
    return KINLAB_ERR_INTERNAL;
  }
}

kinlab_status bad_argument(const char* what) {
  clear_error();
  last_message = what;
  last_json = kinlab::Json{{"error", "argument"}, {"message", what}}.dump();
  return KINLAB_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* kinlab_version(void) { return "0.1.0"; }
const char* kinlab_last_error(void) { return last_message.c_str(); }
const char* kinlab_last_error_json(void) { return last_json.c_str(); }
long long kinlab_last_error_step(void) { return last_step; }

kinlab_status kinlab_config_parse(const char* json_text, kinlab_config** out) {
  if (!json_text || !out) return bad_argument("null argument");
  return guarded([&] { *out = new kinlab_config{kinlab::parse_config_text(json_text)}; });
}

kinlab_status kinlab_config_load(const char* path, kinlab_config** out) {
  if (!path || !out) return bad_argument("null argument");
  return guarded([&] { *out = new kinlab_config{kinlab::load_config(path)}; });
}

void kinlab_config_free(kinlab_config* cfg) { delete cfg; }

kinlab_status kinlab_config_set_seed(kinlab_config* cfg, uint64_t seed) {
  if (!cfg) return bad_argument("null config");
  cfg->cfg.seed = seed;
  return KINLAB_OK;
}

kinlab_status kinlab_config_get_seed(const kinlab_config* cfg, uint64_t* seed) {
  if (!cfg || !seed) return bad_argument("null argument");
  *seed = cfg->cfg.seed;
  return KINLAB_OK;
}

kinlab_status kinlab_config_to_json(const kinlab_config* cfg, char** out) {
  if (!cfg || !out) return bad_argument("null argument");
  return guarded([&] { *out = dup_string(kinlab::to_json(cfg->cfg).dump(2)); });
}

kinlab_status kinlab_config_hash(const kinlab_config* cfg, char* out, size_t size) {
  if (!cfg || !out || size < 17) return bad_argument("hash buffer needs 17 bytes");
  return guarded([&] {
    const std::string h = kinlab::config_hash(cfg->cfg);
    std::memcpy(out, h.c_str(), h.size() + 1);
  });
}

int kinlab_config_equal(const kinlab_config* a, const kinlab_config* b) {
  if (!a || !b) return 0;
  return a->cfg == b->cfg ? 1 : 0;
}

kinlab_status kinlab_run(const kinlab_config* cfg, const char* command, const kinlab_run_options* opts, char** report) {
  if (!cfg || !command) return bad_argument("null argument");
  return guarded([&] {
    kinlab::RunOptions ro;
    if (opts) {
      ro.threads = opts->threads == 0 ? 1 : opts->threads;
      ro.reproducible = opts->reproducible != 0;
      if (opts->out_dir) ro.out_dir = opts->out_dir;
    }
    const auto rep = kinlab::run_experiment(cfg->cfg, command, ro);
    if (report) *report = dup_string(rep.dump(2));
  });
}

void kinlab_string_free(char* s) { delete[] s; }

kinlab_status kinlab_noise_sample(uint64_t seed, size_t steps, double dt, size_t modes, kinlab_noise** out) {
  if (!out) return bad_argument("null argument");
  return guarded([&] { *out = new kinlab_noise{kinlab::sample_path(seed, steps, dt, modes)}; });
}

kinlab_status kinlab_noise_load(const char* path, kinlab_noise** out) {
  if (!path || !out) return bad_argument("null argument");
  return guarded([&] { *out = new kinlab_noise{kinlab::load_path(path)}; });
}

kinlab_status kinlab_noise_save(const kinlab_noise* noise, const char* path) {
  if (!noise || !path) return bad_argument("null argument");
  return guarded([&] { kinlab::save_path(path, noise->path); });
}

kinlab_status kinlab_noise_increment(const kinlab_noise* noise, size_t k, size_t j, double* out) {
  if (!noise || !out) return bad_argument("null argument");
  if (k < 1 || k > noise->path.modes() || j >= noise->path.steps()) return bad_argument("increment index out of range");
  *out = noise->path.increment(k, j);
  return KINLAB_OK;
}

void kinlab_noise_free(kinlab_noise* noise) { delete noise; }

kinlab_status kinlab_regularity_exponent(double gamma, double alpha, double* out) {
  if (!out) return bad_argument("null argument");
  return guarded([&] { *out = kinlab::regularity_exponent(gamma, alpha); });
}

kinlab_status kinlab_phi_n(double xi, int n, double p, double out[3]) {
  if (!out) return bad_argument("null argument");
  return guarded([&] {
    out[0] = kinlab::eval_phi_n(xi, n, p);
    out[1] = kinlab::eval_phi_n_d1(xi, n, p);
    out[2] = kinlab::eval_phi_n_d2(xi, n, p);
  });
}

}  // extern "C"
