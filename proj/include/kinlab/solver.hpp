#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kinlab/grid.hpp"
#include "kinlab/model.hpp"
#include "kinlab/noise.hpp"

namespace kinlab {

enum class Scheme { Eta, R, Tau };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct RegularizationParams {
  Scheme scheme = Scheme::Tau;
  double eta = 0.0;  // weight of -eta Delta^2
  double R = std::numeric_limits<double>::infinity();  // flux truncation radius
  double tau = 0.0;  // artificial viscosity tau Delta
  double mollify = 0.0;  // xi-mollification width of the coefficients; 0 = none
  double dt = 1e-3;
  double T = 1.0;

  std::size_t steps() const;
  bool operator==(const RegularizationParams&) const = default;
};

/// Throws Error(Precondition) when the scheme tag and parameters disagree.
void validate(const RegularizationParams& p);

/// 0.4 * min{h / max|b|, h^2 / (2N max|A|)} over xi in [-state_range, state_range];
/// +inf when both explicit terms vanish.
double stable_dt(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, double state_range);

/// The coefficients a scheme actually integrates: flux truncated at R when
/// finite, coefficients mollified when p.mollify > 0.
ProblemSpec effective_spec(const ProblemSpec& spec, const RegularizationParams& p);

struct Trajectory {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<std::size_t> steps;  // step index of each snapshot
  std::vector<ScalarField> fields;
  RegularizationParams params;
  std::uint64_t noise_seed = 0;
  std::size_t noise_modes = 0;

  std::size_t size() const { return fields.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Blow-up carrying everything computed up to the last finite snapshot.
class TrajectoryBlowUp : public BlowUpError {
 public:
  TrajectoryBlowUp(std::size_t step, const std::string& what, Trajectory partial)
      : BlowUpError(step, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Exact periodic solve of (I + eta dt Delta_h^2 - tau dt Delta_h) v = r in
/// Fourier space, using the symbol of the discrete Laplacian.
class ImplicitOperator {
 public:
  ImplicitOperator(const TorusGrid& grid, double eta_dt, double tau_dt);
  ~ImplicitOperator();
  ImplicitOperator(const ImplicitOperator&) = delete;
  ImplicitOperator& operator=(const ImplicitOperator&) = delete;

  bool identity() const { return identity_; }
  void solve_in_place(ScalarField& r);

 private:
  struct Plans;
  TorusGrid grid_;
  bool identity_ = true;
  std::vector<double> symbol_inv_;
  std::unique_ptr<Plans> plans_;
};

/// Snapshot step indices for `times`; each must be a multiple of dt in [0, T].
std::vector<std::size_t> steps_for_times(const std::vector<double>& times, const RegularizationParams& p);
/// Every `every`-th step plus the final one.
std::vector<std::size_t> every_n_steps(const RegularizationParams& p, std::size_t every);

/// One semi-implicit Euler-Maruyama step. `spec` must already be the
/// effective spec; `op` the implicit operator for (p.eta, p.tau, p.dt).
ScalarField step(const ScalarField& u, const RegularizationParams& p, const ProblemSpec& spec, const NoisePath& path,
                 std::size_t step_index, ImplicitOperator& op);

/// Convenience overload building the effective spec and operator per call.
ScalarField step(const ScalarField& u, const RegularizationParams& p, const ProblemSpec& spec, const NoisePath& path,
                 std::size_t step_index);

Trajectory solve(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, const NoisePath& path,
                 const ScalarField& u0, const std::vector<std::size_t>& output_steps);
Trajectory solve(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, const NoisePath& path,
                 const std::vector<double>& output_times);

/// Two initial states advanced with one noise realization.
std::pair<Trajectory, Trajectory> coupled_solve(const ProblemSpec& spec, const TorusGrid& grid,
                                                const RegularizationParams& p, const NoisePath& path,
                                                const ScalarField& u0_a, const ScalarField& u0_b,
                                                const std::vector<std::size_t>& output_steps);

/// L1-in-time distance int_0^T ||u - v||_{L1} dt by the trapezoid rule over
/// matching snapshots.
double l1_time_distance(const Trajectory& a, const Trajectory& b);

struct CascadeTable {
  std::vector<double> taus;
  std::vector<std::vector<double>> distance;  // symmetric, zero diagonal
};

/// Solves for every tau on a common path and returns pairwise distances.
CascadeTable cascade_tau(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                         const NoisePath& path, const ScalarField& u0, RegularizationParams base,
                         std::size_t output_every = 1);

/// Circular convolution with a nonnegative unit-mass radial bump of radius eps.
ScalarField mollify_initial(const ScalarField& u0, double eps);

}  // namespace kinlab
