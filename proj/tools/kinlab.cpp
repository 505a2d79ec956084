#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kinlab/kinlab.h"

namespace {

int exit_code(kinlab_status s) {
  switch (s) {
    case KINLAB_OK: return 0;
    case KINLAB_ERR_CONFIG:
    case KINLAB_ERR_DOMAIN:
    case KINLAB_ERR_ARGUMENT: return 2;
    case KINLAB_ERR_BLOWUP: return 3;
    default: return 1;
  }
}

int fail(kinlab_status s) {
  std::fprintf(stderr, "%s\n", kinlab_last_error_json());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic degenerate parabolic-hyperbolic solver and verification harness"};
  app.set_version_flag("--version", std::string(kinlab_version()));

  std::string command, config_path, out_dir;
  unsigned threads = 1;
  bool reproducible = false;
  std::optional<std::uint64_t> seed;

  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(
          {"run", "cascade", "contraction", "energy", "regularity", "kinetic-check", "ito-check", "audit"}));
  app.add_option("--config,-c", config_path, "JSON run configuration")->required();
  app.add_option("--out,-o", out_dir, "Output directory (overrides the config)")->envname("KINLAB_OUT");
  app.add_option("--threads,-j", threads, "Worker threads for ensembles")
      ->envname("KINLAB_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_flag("--reproducible", reproducible, "Omit the timestamp so reruns are byte-identical");
  app.add_option("--seed", seed, "Override the master seed");

  CLI11_PARSE(app, argc, argv);

  kinlab_config* cfg = nullptr;
  if (auto s = kinlab_config_load(config_path.c_str(), &cfg); s != KINLAB_OK) return fail(s);
  if (seed) kinlab_config_set_seed(cfg, *seed);

  kinlab_run_options opts{threads, reproducible ? 1 : 0, out_dir.empty() ? nullptr : out_dir.c_str()};
  char* report = nullptr;
  const kinlab_status s = kinlab_run(cfg, command.c_str(), &opts, &report);
  kinlab_config_free(cfg);
  if (s != KINLAB_OK) return fail(s);
  std::printf("%s\n", report);
  kinlab_string_free(report);
  return 0;
}
