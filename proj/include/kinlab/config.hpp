#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinlab/grid.hpp"
#include "kinlab/kinetic.hpp"
#include "kinlab/model.hpp"
#include "kinlab/solver.hpp"

namespace kinlab {

using Json = nlohmann::ordered_json;

struct FluxDesc {
  std::string type = "zero";  // zero | linear | burgers
  Vec velocity{1.0, 0.0};
  Vec direction{1.0, 0.0};
  bool operator==(const FluxDesc&) const = default;
};

struct DiffusionDesc {
  std::string type = "zero";  // zero | identity | degenerate
  double scale = 1.0;
  double a_max = 4.0;
  bool operator==(const DiffusionDesc&) const = default;
};

struct NoiseDesc {
  std::string type = "none";  // none | additive | multiplicative
  std::size_t modes = 0;
  double scale = 1.0;
  double decay = 1.0;
  bool operator==(const NoiseDesc&) const = default;
};

struct InitialDesc {
  std::string type = "sine";  // sine | constant | riemann | bump | random_fourier
  double amplitude = 1.0;
  int mode = 1;
  double offset = 0.0;
  double left = 1.0, right = 0.0, x0 = 0.5;
  Point center{0.5, 0.5};
  double radius = 0.25;
  double height = 1.0;
  std::uint64_t seed = 7;
  int modes = 8;
  double decay = 1.5;
  bool operator==(const InitialDesc&) const = default;
};

/// Coefficients by catalog piece. A catalog key fills every piece; explicit
/// pieces in the config override it.
struct ProblemDesc {
  std::string name = "custom";
  FluxDesc flux;
  DiffusionDesc diffusion;
  NoiseDesc noise;
  InitialDesc initial;
  std::optional<InitialDesc> initial_b;
  std::map<std::string, double> hypotheses;  // overrides of the derived constants
  bool operator==(const ProblemDesc&) const = default;
};

const std::vector<std::string>& catalog_keys();
ProblemDesc catalog_problem(const std::string& key);

/// Builds the ProblemSpec; hypothesis constants come from catalog_hypotheses
/// over [-xi_box, xi_box] and then the overrides.
ProblemSpec build_spec(const ProblemDesc& desc, int dim, double xi_box);
InitialProfile build_initial(const InitialDesc& d, int dim);

struct ExperimentOptions {
  double p = 2.0;                    // energy moment
  double lambda = 0.5;               // seminorm order of the rho-report
  std::optional<double> s;           // regularity order; default varsigma / 2
  double measure_R = 4.0;            // tail radius of the kinetic measure
  std::size_t velocity_points = 201;
  std::optional<std::pair<double, double>> velocity_range;
  KineticTestFunction test;
  std::string kernel = "bump";
  int ito_power = 2;
  std::size_t audit_samples = 4096;
  std::size_t eps_points = 24;
  bool operator==(const ExperimentOptions&) const = default;
};

struct RunConfig {
  ProblemDesc problem;
  int dim = 1;
  std::size_t points = 128;
  RegularizationParams params;
  std::vector<double> tau_list;
  std::size_t output_every = 0;     // 0: unset
  std::vector<double> output_times;  // used when output_every is unset
  std::uint64_t seed = 1;
  std::size_t members = 64;
  double state_range = 8.0;
  ExperimentOptions options;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;

  TorusGrid grid() const { return TorusGrid(dim, points); }
  ProblemSpec spec() const { return build_spec(problem, dim, state_range); }
  /// tau_list when given, else the single params.tau.
  std::vector<double> taus() const;
  /// params with tau replaced.
  RegularizationParams with_tau(double tau) const;
  std::vector<double> snapshot_times() const;
  VelocityGrid velocity_grid() const;
};

/// Throws ConfigError naming the offending field as a JSON pointer.
RunConfig parse_config(const Json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Re-validates a config after programmatic edits.
void validate_config(const RunConfig& c);

Json to_json(const RunConfig& c);
/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace kinlab
