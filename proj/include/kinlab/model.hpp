#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kinlab/error.hpp"

namespace kinlab {

/// Point on the torus [0,1)^N; unused trailing components are zero.
using Point = std::array<double, 2>;
/// Vector in R^N with the same convention.
using Vec = std::array<double, 2>;

/// Dense N x N matrix for N <= 2, row-major.
struct SmallMatrix {
  int n = 1;
  std::array<double, 4> a{};

  static SmallMatrix zero(int n) { return SmallMatrix{n, {}}; }
  static SmallMatrix diag(int n, double d) {
    SmallMatrix m{n, {}};
    for (int i = 0; i < n; ++i) m(i, i) = d;
    return m;
  }
  double& operator()(int i, int j) { return a[i * 2 + j]; }
  double operator()(int i, int j) const { return a[i * 2 + j]; }

  bool is_diagonal() const { return n == 1 || (a[1] == 0.0 && a[2] == 0.0); }
  /// Frobenius norm.
  double norm() const;
  SmallMatrix operator*(const SmallMatrix& o) const;
  SmallMatrix operator-(const SmallMatrix& o) const;
  /// Eigenvalues in ascending order (symmetric part only).
  std::array<double, 2> eigenvalues() const;
  /// Principal square root of a symmetric PSD matrix; negative eigenvalues are
  /// clipped to zero.
  SmallMatrix sqrt_psd() const;
};

struct FluxCoeff {
  std::function<Vec(double)> value;       // B(xi)
  std::function<Vec(double)> derivative;  // b(xi) = B'(xi)
};

/// A(xi) and its companions. Empty optional members are filled in on demand:
/// sigma from the PSD square root, the antiderivatives by adaptive quadrature.
struct DiffusionCoeff {
  std::function<SmallMatrix(double)> matrix;
  std::function<SmallMatrix(double)> root;
  std::function<SmallMatrix(double)> antiderivative;       // Abar(xi) = int_0^xi A
  std::function<SmallMatrix(double)> root_antiderivative;  // Sigma(xi) = int_0^xi sigma
  bool constant = false;
  bool zero = false;
};

/// The noise family g_k(x, xi), k = 1, 2, ...; `modes` is the truncation K
/// used by the hypothesis audit and the tail diagnostic.
struct NoiseCoeff {
  std::size_t modes = 0;
  std::function<double(std::size_t k, const Point& x, double xi)> g;
  /// sum_{k>K} sup_x g_k^2 / (1 + xi^2), the part of the growth bound dropped
  /// by truncation. Zero when unknown or the family is finite.
  double tail_bound = 0.0;
  bool additive = false;  // g_k independent of (x, xi)

  bool empty() const { return modes == 0 || !g; }
};

/// Hypothesis constants the audit checks against.
struct Hypotheses {
  double flux_degree = 2.0;     // p_B: |b(xi)| <= C_B (1 + |xi|^{p_B - 1})
  double flux_constant = 1.0;   // C_B
  double sigma_max = 1.0;       // sup |sigma|
  double gamma = 1.0;           // Hoelder exponent of sigma, in (1/2, 1]
  double holder_constant = 1.0; // C_sigma
  double growth_constant = 1.0; // C_G in G^2 <= C_G (1 + xi^2)
  double alpha = 1.0;           // exponent of the modulus h(delta) <= C delta^alpha
  double modulus_constant = 1.0;
};

struct InitialProfile {
  std::string name;
  std::function<double(const Point&)> value;
};

struct ProblemSpec {
  int dim = 1;
  std::string name;
  FluxCoeff flux;
  DiffusionCoeff diffusion;
  NoiseCoeff noise;
  InitialProfile initial;
  Hypotheses hyp;

  Vec B(double xi) const { return flux.value(xi); }
  Vec b(double xi) const { return flux.derivative(xi); }
  SmallMatrix A(double xi) const { return diffusion.matrix(xi); }
  SmallMatrix sigma(double xi) const;
  SmallMatrix A_bar(double xi) const;
  SmallMatrix Sigma(double xi) const;
  /// G^2(x, xi) over the first `modes` noise modes.
  double G2(const Point& x, double xi, std::size_t modes) const;
};

// --- built-in coefficient catalog -------------------------------------------

FluxCoeff flux_zero(int dim);
FluxCoeff flux_linear(int dim, Vec velocity);
/// B(xi) = direction * xi^2 / 2.
FluxCoeff flux_burgers(int dim, Vec direction);

DiffusionCoeff diffusion_zero(int dim);
DiffusionCoeff diffusion_identity(int dim, double scale);
/// A(xi) = diag(min(xi^2, a_max)): degenerate at xi = 0, bounded.
DiffusionCoeff diffusion_degenerate(int dim, double a_max);

NoiseCoeff noise_none();
/// g_k = scale * k^-decay.
NoiseCoeff noise_additive(std::size_t modes, double scale, double decay);
/// g_k(x, xi) = scale * k^-decay * sin(2 pi k x_1) * xi / (1 + xi^2).
NoiseCoeff noise_multiplicative(std::size_t modes, double scale, double decay);

InitialProfile initial_sine(double amplitude, int mode, double offset);
/// left on [0, x0), right on [x0, 1) along the first axis.
InitialProfile initial_riemann(double left, double right, double x0);
/// Smooth compactly supported bump (1 - r^2)^4 of given radius and height.
InitialProfile initial_bump(Point center, double radius, double height);
/// Sum of `modes` Fourier modes with seeded Gaussian coefficients decaying as
/// k^-decay.
InitialProfile initial_random_fourier(int dim, std::uint64_t seed, int modes, double amplitude, double decay);

/// Fills in hypothesis constants that hold for the given catalog pieces.
Hypotheses catalog_hypotheses(const ProblemSpec& spec, double xi_box);

// --- operations --------------------------------------------------------------

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double observed = 0.0;  // worst observed ratio (or eigenvalue / residual)
  double limit = 0.0;     // pass threshold for `observed`
  std::vector<double> witness;
  std::string detail;
};

struct AuditReport {
  std::vector<HypothesisCheck> checks;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  bool all_pass() const;
  const HypothesisCheck& check(const std::string& name) const;
};

struct AuditOptions {
  double xi_box = 8.0;  // xi sampled in [-xi_box, xi_box]
  std::size_t modes = 0; // 0: use spec.noise.modes
};

/// Sampling-based check of the coefficient hypotheses over quasi-random
/// (Halton, seeded rotation) points. Throws Error(Evaluation) naming xi when a
/// coefficient is non-finite.
AuditReport audit_hypotheses(const ProblemSpec& spec, std::size_t samples, std::uint64_t seed,
                             const AuditOptions& opts = {});

/// min{(2 gamma - 1)/(gamma + 1), 2 alpha/(alpha + 1)}.
double regularity_exponent(double gamma, double alpha);

/// Flux equal to B on [-R, R] and continued linearly (C^1) outside.
ProblemSpec truncate_flux(const ProblemSpec& spec, double R);

/// Convolves the xi-dependence of B, b, A and g_k with a symmetric bump of
/// half-width eta. sigma is recomputed as sqrt(A^eta).
ProblemSpec mollify_coefficients(const ProblemSpec& spec, double eta);

/// Convolution of a scalar function of xi with the bump of half-width eta.
double mollify_scalar(const std::function<double(double)>& f, double xi, double eta);

/// phi_n: |xi|^p on |xi| <= n, quadratic continuation beyond.
double eval_phi_n(double xi, int n, double p);
double eval_phi_n_d1(double xi, int n, double p);
double eval_phi_n_d2(double xi, int n, double p);

}  // namespace kinlab
