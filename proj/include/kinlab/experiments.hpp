#pragma once

#include <string>
#include <vector>

#include "kinlab/config.hpp"

namespace kinlab {

struct RunOptions {
  unsigned threads = 1;
  bool reproducible = false;  // omit the timestamp from report.json
  std::string out_dir;        // overrides the config's output_dir when non-empty
};

const std::vector<std::string>& experiment_commands();

/// Runs one subcommand, writes report.json plus its CSV tables into the
/// output directory and returns the report. Errors propagate as exceptions.
Json run_experiment(const RunConfig& cfg, const std::string& command, const RunOptions& opts);

/// Machine-readable description of an exception, as printed on failure.
Json error_json(const std::exception& e);
/// 2 for configuration and precondition failures, 3 for blow-up, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace kinlab
