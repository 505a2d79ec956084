#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kinlab/grid.hpp"
#include "kinlab/model.hpp"
#include "kinlab/noise.hpp"
#include "kinlab/solver.hpp"

namespace kinlab {

struct EnsembleStat {
  double mean = 0.0;
  double se = 0.0;  // sample stddev / sqrt(count)
  std::size_t count = 0;

  static EnsembleStat of(const std::vector<double>& samples);
};

/// Runs fn(member) for member in [0, count) on up to `threads` workers.
/// Results must be written by index; no ordering is assumed.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// (h^N sum |u_i|^p)^(1/p).
double lp_norm(const ScalarField& u, double p);

// --- fractional seminorms -------------------------------------------------------

struct SeminormEstimate {
  double value = 0.0;
  double sampling_error = 0.0;  // zero when every pair is summed
};

struct SeminormOptions {
  /// N=2 only: offsets with max-norm <= exact_radius are summed exactly; the
  /// remaining shells are sampled with this many offsets per shell.
  std::size_t exact_radius = 6;
  std::size_t samples_per_shell = 48;
  std::uint64_t seed = 0x5EED;
};

/// p^lambda(u) = int int |u(x) - u(y)| / |x - y|^(N + lambda) over the torus
/// with wrap-around distance, u piecewise constant on cells. Cell-pair kernel
/// weights are integrated exactly (N=1) or by adaptive quadrature (N=2).
SeminormEstimate seminorm_p(const ScalarField& u, double lambda, const SeminormOptions& opts = {});

enum class RadialKernel { Bump, Hat, Indicator };
RadialKernel kernel_from_string(const std::string& s);
const char* to_string(RadialKernel k);

struct SeminormReport {
  double lambda = 0.0;
  double p_lambda = 0.0;
  double p_lambda_error = 0.0;
  double p_rho = 0.0;  // max over the eps grid
  std::vector<double> eps;
  std::vector<double> values;  // eps^-lambda int int |u(x) - u(y)| rho_eps(x - y)
};

/// p^lambda_rho over a geometric eps grid from 2h to 2 D_N, with the
/// periodized kernel rho_eps(z) = eps^-N rho(|z| / eps).
SeminormReport seminorm_rho(const ScalarField& u, double lambda, RadialKernel kernel, std::size_t eps_points = 24,
                            const SeminormOptions& opts = {});

// --- Ito formula ---------------------------------------------------------------

struct ItoTest {
  std::function<double(double)> phi, dphi, d2phi;
  double d2_bound = 1e300;  // required bound on |phi''| over observed states
  std::function<double(const Point&)> psi = [](const Point&) { return 1.0; };
};

ItoTest ito_power(int power);  // phi = xi^power for power in {1, 2}

struct ItoResidual {
  double lhs = 0.0;              // <phi(u(T)), psi> - <phi(u0), psi>
  double source_term = 0.0;      // int <phi'(u) F, psi>
  double gradient_term = 0.0;    // -int <phi''(u) grad u . G, psi>
  double divergence_term = 0.0;  // int <div(phi'(u) G), psi>
  double stochastic_term = 0.0;  // sum_k int <phi'(u) H_k, psi> dbeta_k
  double ito_term = 0.0;         // 1/2 sum_k int <phi''(u) H_k^2, psi>
  double defect = 0.0;           // lhs - right side

  double abs() const { return defect < 0 ? -defect : defect; }
};

/// Both sides of the Ito formula for du = (F + div G) dt + H dW with F the
/// fourth-order term, G = (A(u) + tau) grad u - B(u), H_k = g_k(., u),
/// discretized on cell faces consistently with the scheme. Requires a
/// snapshot at every step. `with_correction = false` drops the Ito term.
ItoResidual ito_residual(const Trajectory& traj, const ProblemSpec& spec, const NoisePath& path, const ItoTest& test,
                         bool with_correction = true);

// --- ensemble reports -------------------------------------------------------------

struct EnergyRow {
  double tau = 0.0;
  EnsembleStat sup_norm;     // E sup_t ||u(t)||_p^p
  EnsembleStat dissipation;  // E int int |u|^(p-2) (|sigma(u) grad u|^2 + tau |grad u|^2)
  double bound_ratio = 0.0;  // sup_norm.mean / (1 + ||u0||_p^p)
  std::size_t excluded = 0;  // members lost to blow-up
};

struct EnergyReport {
  double p = 2.0;
  double initial_moment = 0.0;  // ||u0||_p^p
  std::vector<EnergyRow> rows;
  double flatness = 0.0;  // max / min over tau of sup_norm.mean
};

struct EnsembleOptions {
  std::size_t members = 64;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t output_every = 1;
};

EnergyReport energy_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<RegularizationParams>& params,
                           double p, const EnsembleOptions& opts);

struct ContractionRow {
  double time = 0.0;
  EnsembleStat distance;  // E ||u_a(t) - u_b(t)||_1
  double ratio = 0.0;     // distance.mean / ||u0_a - u0_b||_1
  double ratio_se = 0.0;
};

struct ContractionReport {
  double initial_distance = 0.0;
  std::vector<ContractionRow> rows;
  double c_disc = 0.0;  // max(0, max_t deterministic ratio - 1)
  bool pass = false;    // ratio <= 1 + 3 SE + c_disc at every time
};

/// Deterministic-limit defect: the same run with the noise removed.
double deterministic_contraction_defect(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p,
                                        const ScalarField& u0_a, const ScalarField& u0_b,
                                        const std::vector<std::size_t>& steps);

ContractionReport contraction_report(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p,
                                     const ScalarField& u0_a, const ScalarField& u0_b, const std::vector<double>& times,
                                     const EnsembleOptions& opts);

struct RegularityReport {
  double s = 0.0;
  double varsigma = 0.0;
  std::vector<double> taus;
  std::vector<double> times;
  std::vector<std::vector<EnsembleStat>> values;  // [tau][time] of p^s(u^tau(t))
  std::vector<double> sup_over_time;              // per tau, max_t of the means
  double flatness = 0.0;                          // max / min over tau of sup_over_time
};

RegularityReport regularity_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                                   RegularizationParams base, double s, const std::vector<double>& times,
                                   const EnsembleOptions& opts);

struct CauchyReport {
  std::vector<double> taus;
  std::vector<std::vector<EnsembleStat>> distance;  // E d(tau_i, tau_j)
  std::vector<EnsembleStat> consecutive_drop;       // d(i, i+1) - d(i+1, i+2), paired per path
  bool decreasing = false;  // every drop.mean + 3 drop.se > 0 and every point estimate decreases
};

CauchyReport cauchy_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                           RegularizationParams base, const EnsembleOptions& opts);

}  // namespace kinlab
