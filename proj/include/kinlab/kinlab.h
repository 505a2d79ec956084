#ifndef KINLAB_H
#define KINLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KINLAB_API __declspec(dllexport)
#else
#define KINLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The numeric values of KINLAB_ERR_CONFIG and KINLAB_ERR_BLOWUP
   double as the CLI exit codes. */
typedef enum {
  KINLAB_OK = 0,
  KINLAB_ERR_INTERNAL = 1,
  KINLAB_ERR_CONFIG = 2,
  KINLAB_ERR_BLOWUP = 3,
  KINLAB_ERR_IO = 4,
  KINLAB_ERR_DOMAIN = 5,
  KINLAB_ERR_ARGUMENT = 6
} kinlab_status;

typedef struct kinlab_config kinlab_config;
typedef struct kinlab_noise kinlab_noise;

typedef struct {
  unsigned threads;  /* 0 or 1: run members sequentially */
  int reproducible;  /* nonzero: omit the report timestamp */
  const char* out_dir; /* NULL: use the config's output_dir */
} kinlab_run_options;

KINLAB_API const char* kinlab_version(void);

/* Message and JSON description of the last failure on this thread. */
KINLAB_API const char* kinlab_last_error(void);
KINLAB_API const char* kinlab_last_error_json(void);
/* Step index of the last blow-up on this thread, or -1. */
KINLAB_API long long kinlab_last_error_step(void);

KINLAB_API kinlab_status kinlab_config_parse(const char* json_text, kinlab_config** out);
KINLAB_API kinlab_status kinlab_config_load(const char* path, kinlab_config** out);
KINLAB_API void kinlab_config_free(kinlab_config* cfg);
KINLAB_API kinlab_status kinlab_config_set_seed(kinlab_config* cfg, uint64_t seed);
KINLAB_API kinlab_status kinlab_config_get_seed(const kinlab_config* cfg, uint64_t* seed);
/* Canonical JSON of the config; release with kinlab_string_free. */
KINLAB_API kinlab_status kinlab_config_to_json(const kinlab_config* cfg, char** out);
/* 16 hex digits plus NUL; `out` must hold 17 bytes. */
KINLAB_API kinlab_status kinlab_config_hash(const kinlab_config* cfg, char* out, size_t size);
KINLAB_API int kinlab_config_equal(const kinlab_config* a, const kinlab_config* b);

/* Runs a subcommand ("run", "cascade", "contraction", "energy", "regularity",
   "kinetic-check", "ito-check", "audit"). `report` may be NULL; otherwise it
   receives the report JSON, released with kinlab_string_free. */
KINLAB_API kinlab_status kinlab_run(const kinlab_config* cfg, const char* command, const kinlab_run_options* opts,
                                    char** report);

KINLAB_API void kinlab_string_free(char* s);

KINLAB_API kinlab_status kinlab_noise_sample(uint64_t seed, size_t steps, double dt, size_t modes,
                                             kinlab_noise** out);
KINLAB_API kinlab_status kinlab_noise_load(const char* path, kinlab_noise** out);
KINLAB_API kinlab_status kinlab_noise_save(const kinlab_noise* noise, const char* path);
/* Increment of beta_k over step j; k is 1-based. */
KINLAB_API kinlab_status kinlab_noise_increment(const kinlab_noise* noise, size_t k, size_t j, double* out);
KINLAB_API void kinlab_noise_free(kinlab_noise* noise);

KINLAB_API kinlab_status kinlab_regularity_exponent(double gamma, double alpha, double* out);
/* out[0..2] = phi_n, phi_n', phi_n'' at xi. */
KINLAB_API kinlab_status kinlab_phi_n(double xi, int n, double p, double out[3]);

#ifdef __cplusplus
}
#endif

#endif
