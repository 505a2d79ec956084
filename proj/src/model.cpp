#include "kinlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "kinlab/quadrature.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Range: return "range";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Config: return "config";
    case ErrorKind::BlowUp: return "blow_up";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// --- SmallMatrix ---------------------------------------------------------------

double SmallMatrix::norm() const {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

SmallMatrix SmallMatrix::operator*(const SmallMatrix& o) const {
  SmallMatrix r = zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) r(i, j) += (*this)(i, k) * o(k, j);
  return r;
}

SmallMatrix SmallMatrix::operator-(const SmallMatrix& o) const {
  SmallMatrix r = *this;
  for (int i = 0; i < 4; ++i) r.a[i] -= o.a[i];
  return r;
}

std::array<double, 2> SmallMatrix::eigenvalues() const {
  if (n == 1) return {a[0], a[0]};
  const double p = a[0], q = a[3], off = 0.5 * (a[1] + a[2]);
  const double mean = 0.5 * (p + q);
  const double rad = std::hypot(0.5 * (p - q), off);
  return {mean - rad, mean + rad};
}

SmallMatrix SmallMatrix::sqrt_psd() const {
  if (n == 1) return SmallMatrix{1, {std::sqrt(std::max(a[0], 0.0)), 0, 0, 0}};
  const double off = 0.5 * (a[1] + a[2]);
  if (off == 0.0) {
    SmallMatrix r = zero(2);
    r(0, 0) = std::sqrt(std::max(a[0], 0.0));
    r(1, 1) = std::sqrt(std::max(a[3], 0.0));
    return r;
  }
  // Eigen-decomposition of the symmetric 2x2 block.
  const auto ev = eigenvalues();
  const double theta = 0.5 * std::atan2(2.0 * off, a[0] - a[3]);
  const double c = std::cos(theta), s = std::sin(theta);
  // Eigenvector (c, s) belongs to the larger eigenvalue.
  const double big = std::sqrt(std::max(ev[1], 0.0)), small = std::sqrt(std::max(ev[0], 0.0));
  SmallMatrix r = zero(2);
  r(0, 0) = big * c * c + small * s * s;
  r(1, 1) = big * s * s + small * c * c;
  r(0, 1) = r(1, 0) = (big - small) * c * s;
  return r;
}

// --- ProblemSpec derived quantities -------------------------------------------

namespace {

SmallMatrix integrate_matrix(const std::function<SmallMatrix(double)>& f, int n, double xi) {
  SmallMatrix r = SmallMatrix::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = quad::integrate([&](double z) { return f(z)(i, j); }, 0.0, xi, 1e-10);
  return r;
}

}  // namespace

SmallMatrix ProblemSpec::sigma(double xi) const {
  if (diffusion.root) return diffusion.root(xi);
  return diffusion.matrix(xi).sqrt_psd();
}

SmallMatrix ProblemSpec::A_bar(double xi) const {
  if (diffusion.antiderivative) return diffusion.antiderivative(xi);
  return integrate_matrix(diffusion.matrix, dim, xi);
}

SmallMatrix ProblemSpec::Sigma(double xi) const {
  if (diffusion.root_antiderivative) return diffusion.root_antiderivative(xi);
  return integrate_matrix([this](double z) { return sigma(z); }, dim, xi);
}

double ProblemSpec::G2(const Point& x, double xi, std::size_t modes) const {
  if (!noise.g) return 0.0;
  double s = 0.0;
  for (std::size_t k = 1; k <= modes; ++k) {
    const double g = noise.g(k, x, xi);
    s += g * g;
  }
  return s;
}

// --- catalog -----------------------------------------------------------------

FluxCoeff flux_zero(int) {
  return {[](double) { return Vec{0.0, 0.0}; }, [](double) { return Vec{0.0, 0.0}; }};
}

FluxCoeff flux_linear(int dim, Vec velocity) {
  if (dim == 1) velocity[1] = 0.0;
  return {[velocity](double xi) { return Vec{velocity[0] * xi, velocity[1] * xi}; },
          [velocity](double) { return velocity; }};
}

FluxCoeff flux_burgers(int dim, Vec direction) {
  if (dim == 1) direction[1] = 0.0;
  return {[direction](double xi) { return Vec{direction[0] * 0.5 * xi * xi, direction[1] * 0.5 * xi * xi}; },
          [direction](double xi) { return Vec{direction[0] * xi, direction[1] * xi}; }};
}

DiffusionCoeff diffusion_zero(int dim) {
  DiffusionCoeff d;
  auto z = [dim](double) { return SmallMatrix::zero(dim); };
  d.matrix = z;
  d.root = z;
  d.antiderivative = z;
  d.root_antiderivative = z;
  d.constant = true;
  d.zero = true;
  return d;
}

DiffusionCoeff diffusion_identity(int dim, double scale) {
  DiffusionCoeff d;
  const double root = std::sqrt(scale);
  d.matrix = [dim, scale](double) { return SmallMatrix::diag(dim, scale); };
  d.root = [dim, root](double) { return SmallMatrix::diag(dim, root); };
  d.antiderivative = [dim, scale](double xi) { return SmallMatrix::diag(dim, scale * xi); };
  d.root_antiderivative = [dim, root](double xi) { return SmallMatrix::diag(dim, root * xi); };
  d.constant = true;
  d.zero = scale == 0.0;
  return d;
}

DiffusionCoeff diffusion_degenerate(int dim, double a_max) {
  DiffusionCoeff d;
  const double r = std::sqrt(a_max);
  d.matrix = [dim, a_max](double xi) { return SmallMatrix::diag(dim, std::min(xi * xi, a_max)); };
  d.root = [dim, r](double xi) { return SmallMatrix::diag(dim, std::min(std::abs(xi), r)); };
  d.antiderivative = [dim, r, a_max](double xi) {
    const double m = std::abs(xi);
    const double v = m <= r ? m * m * m / 3.0 : r * r * r / 3.0 + a_max * (m - r);
    return SmallMatrix::diag(dim, std::copysign(v, xi));
  };
  d.root_antiderivative = [dim, r](double xi) {
    const double m = std::abs(xi);
    const double v = m <= r ? 0.5 * m * m : 0.5 * r * r + r * (m - r);
    return SmallMatrix::diag(dim, std::copysign(v, xi));
  };
  return d;
}

namespace {

double mode_weight(std::size_t k, double scale, double decay) {
  return scale * std::pow(static_cast<double>(k), -decay);
}

/// sum_{k > K} k^{-2 decay}, partial sum plus integral tail estimate.
double power_tail(std::size_t K, double decay) {
  const double e = 2.0 * decay;
  if (e <= 1.0) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  const std::size_t stop = K + 100000;
  for (std::size_t k = K + 1; k <= stop; ++k) s += std::pow(static_cast<double>(k), -e);
  s += std::pow(static_cast<double>(stop) + 0.5, 1.0 - e) / (e - 1.0);
  return s;
}

}  // namespace

NoiseCoeff noise_none() { return NoiseCoeff{}; }

NoiseCoeff noise_additive(std::size_t modes, double scale, double decay) {
  NoiseCoeff n;
  n.modes = modes;
  n.g = [scale, decay](std::size_t k, const Point&, double) { return mode_weight(k, scale, decay); };
  n.tail_bound = scale * scale * power_tail(modes, decay);
  n.additive = true;
  return n;
}

NoiseCoeff noise_multiplicative(std::size_t modes, double scale, double decay) {
  NoiseCoeff n;
  n.modes = modes;
  n.g = [scale, decay](std::size_t k, const Point& x, double xi) {
    return mode_weight(k, scale, decay) * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) * x[0]) * xi /
           (1.0 + xi * xi);
  };
  // sup_xi xi^2 / (1 + xi^2)^3 <= 1/4 bounds the normalized square.
  n.tail_bound = 0.25 * scale * scale * power_tail(modes, decay);
  return n;
}

InitialProfile initial_sine(double amplitude, int mode, double offset) {
  return {"sine", [=](const Point& x) { return offset + amplitude * std::sin(2.0 * std::numbers::pi * mode * x[0]); }};
}

InitialProfile initial_riemann(double left, double right, double x0) {
  return {"riemann", [=](const Point& x) { return x[0] < x0 ? left : right; }};
}

InitialProfile initial_bump(Point center, double radius, double height) {
  return {"bump", [=](const Point& x) {
            double r2 = 0.0;
            for (int d = 0; d < 2; ++d) {
              double dx = std::abs(x[d] - center[d]);
              dx = std::min(dx, 1.0 - dx);
              r2 += dx * dx;
            }
            r2 /= radius * radius;
            if (r2 >= 1.0) return 0.0;
            const double q = 1.0 - r2;
            return height * q * q * q * q;
          }};
}

InitialProfile initial_random_fourier(int dim, std::uint64_t seed, int modes, double amplitude, double decay) {
  struct Term {
    int kx, ky;
    double cs, sn;
  };
  std::vector<Term> terms;
  rng::SplitMix gen(seed);
  for (int kx = 0; kx <= modes; ++kx) {
    for (int ky = (dim == 2 ? -modes : 0); ky <= (dim == 2 ? modes : 0); ++ky) {
      if (kx == 0 && ky <= 0) continue;
      const double kk = std::hypot(kx, ky);
      if (kk > modes) continue;
      const double w = amplitude * std::pow(kk, -decay);
      terms.push_back({kx, ky, w * gen.normal(), w * gen.normal()});
    }
  }
  return {"random_fourier", [terms](const Point& x) {
            double s = 0.0;
            for (const auto& t : terms) {
              const double ph = 2.0 * std::numbers::pi * (t.kx * x[0] + t.ky * x[1]);
              s += t.cs * std::cos(ph) + t.sn * std::sin(ph);
            }
            return s;
          }};
}

// --- audit -------------------------------------------------------------------

namespace {

double radical_inverse(std::uint64_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

/// Halton point with a seeded Cranley-Patterson rotation.
class QuasiRandom {
 public:
  QuasiRandom(std::uint64_t seed, int dims) : shift_(dims) {
    rng::SplitMix gen(seed);
    for (auto& s : shift_) s = gen.uniform();
  }
  double coord(std::uint64_t i, int d) const {
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    const double v = radical_inverse(i + 1, primes[d]) + shift_[d];
    return v - std::floor(v);
  }

 private:
  std::vector<double> shift_;
};

double finite_or_throw(double v, double xi, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << " is not finite at xi=" << xi;
    throw Error(ErrorKind::Evaluation, os.str());
  }
  return v;
}

void check_matrix(const SmallMatrix& m, double xi, const char* what) {
  for (int i = 0; i < m.n * m.n; ++i) finite_or_throw(m.a[(i / m.n) * 2 + i % m.n], xi, what);
}

double vec_norm(const Vec& v, int dim) { return dim == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]); }

double torus_gap(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

void update(HypothesisCheck& c, double ratio, std::vector<double> witness) {
  if (ratio > c.observed || c.witness.empty()) {
    c.observed = std::max(c.observed, ratio);
    c.witness = std::move(witness);
  }
}

}  // namespace

bool AuditReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const HypothesisCheck& AuditReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw Error(ErrorKind::Precondition, "no audit check named " + name);
}

AuditReport audit_hypotheses(const ProblemSpec& spec, std::size_t samples, std::uint64_t seed,
                             const AuditOptions& opts) {
  if (samples < 1) throw Error(ErrorKind::Precondition, "audit needs at least one sample");
  const int dim = spec.dim;
  const double box = opts.xi_box;
  const std::size_t modes = opts.modes ? opts.modes : spec.noise.modes;
  const Hypotheses& h = spec.hyp;
  QuasiRandom qr(seed, 8);

  HypothesisCheck flux{"flux_growth", false, 0.0, 1.0, {}, "|b(xi)| / (C_B (1 + |xi|^(p_B - 1)))"};
  HypothesisCheck psd{"diffusion_psd", false, std::numeric_limits<double>::infinity(), 0.0, {},
                      "minimum eigenvalue of A(xi)"};
  HypothesisCheck square{"sigma_squared", false, 0.0, 1e-8, {}, "|sigma^2 - A| / (1 + |A|)"};
  HypothesisCheck bounded{"sigma_bounded", false, 0.0, 1.0, {}, "|sigma(xi)| / sigma_max"};
  HypothesisCheck holder{"sigma_holder", false, 0.0, 1.0, {},
                         "|sigma(xi) - sigma(zeta)| / (C_sigma |xi - zeta|^gamma), |xi - zeta| < 1"};
  HypothesisCheck growth{"noise_growth", false, 0.0, 1.0, {}, "G^2(x, xi) / (C_G (1 + xi^2))"};
  HypothesisCheck modulus{"noise_modulus", false, 0.0, 1.0, {},
                          "sum_k |g_k(x,xi) - g_k(y,zeta)|^2 / (C (|x - y|^2 + |xi - zeta|^(1 + alpha)))"};

  for (std::size_t i = 0; i < samples; ++i) {
    const double xi = box * (2.0 * qr.coord(i, 0) - 1.0);
    const double delta = 2.0 * qr.coord(i, 1) - 1.0;  // zeta - xi in (-1, 1)
    const double zeta = xi + delta;
    const Point x{qr.coord(i, 2), dim == 2 ? qr.coord(i, 3) : 0.0};
    const Point y{qr.coord(i, 4), dim == 2 ? qr.coord(i, 5) : 0.0};

    const Vec bv = spec.b(xi);
    finite_or_throw(bv[0], xi, "b");
    finite_or_throw(bv[1], xi, "b");
    update(flux, vec_norm(bv, dim) / (h.flux_constant * (1.0 + std::pow(std::abs(xi), h.flux_degree - 1.0))), {xi});

    const SmallMatrix A = spec.A(xi);
    check_matrix(A, xi, "A");
    const double sym_gap = dim == 2 ? std::abs(A(0, 1) - A(1, 0)) : 0.0;
    const double lmin = A.eigenvalues()[0] - sym_gap;
    if (lmin < psd.observed) {
      psd.observed = lmin;
      psd.witness = {xi, lmin};
    }

    const SmallMatrix s = spec.sigma(xi);
    check_matrix(s, xi, "sigma");
    update(square, (s * s - A).norm() / (1.0 + A.norm()), {xi});
    update(bounded, s.norm() / h.sigma_max, {xi});
    const SmallMatrix sz = spec.sigma(zeta);
    check_matrix(sz, zeta, "sigma");
    if (delta != 0.0)
      update(holder, (s - sz).norm() / (h.holder_constant * std::pow(std::abs(delta), h.gamma)), {xi, zeta});

    if (modes > 0 && spec.noise.g) {
      const double g2 = spec.G2(x, xi, modes);
      finite_or_throw(g2, xi, "G^2");
      update(growth, g2 / (h.growth_constant * (1.0 + xi * xi)), {x[0], x[1], xi});
      double diff = 0.0;
      for (std::size_t k = 1; k <= modes; ++k) {
        const double d = spec.noise.g(k, x, xi) - spec.noise.g(k, y, zeta);
        diff += d * d;
      }
      finite_or_throw(diff, xi, "g_k");
      double dx2 = 0.0;
      for (int d = 0; d < dim; ++d) dx2 += torus_gap(x[d], y[d]) * torus_gap(x[d], y[d]);
      const double denom = h.modulus_constant * (dx2 + std::pow(std::abs(delta), 1.0 + h.alpha));
      if (denom > 0.0) update(modulus, diff / denom, {x[0], x[1], xi, y[0], y[1], zeta});
    }
  }

  const double slack = 1.0 + 1e-12;
  flux.pass = flux.observed <= flux.limit * slack;
  psd.pass = psd.observed >= -1e-12;
  square.pass = square.observed <= square.limit;
  bounded.pass = bounded.observed <= bounded.limit * slack;
  holder.pass = holder.observed <= holder.limit * slack;
  growth.pass = growth.observed <= growth.limit * slack;
  modulus.pass = modulus.observed <= modulus.limit * slack;

  AuditReport report;
  report.samples = samples;
  report.seed = seed;
  report.checks = {flux, psd, square, bounded, holder, growth, modulus};
  return report;
}

Hypotheses catalog_hypotheses(const ProblemSpec& spec, double xi_box) {
  Hypotheses h;
  const int dim = spec.dim;
  // Flux: fit C_B for p_B = 2 (linear growth of b) over the box.
  double cb = 0.0, smax = 0.0;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double xi = xi_box * (2.0 * i / (n - 1) - 1.0);
    cb = std::max(cb, vec_norm(spec.b(xi), dim) / (1.0 + std::abs(xi)));
    smax = std::max(smax, spec.sigma(xi).norm());
  }
  h.flux_degree = 2.0;
  h.flux_constant = std::max(cb, 1e-300) * (1.0 + 1e-9);
  h.sigma_max = std::max(smax, 1e-300) * (1.0 + 1e-9);
  // Catalog sigma maps are Lipschitz with constant sqrt(dim).
  h.gamma = 1.0;
  h.holder_constant = std::sqrt(static_cast<double>(dim));
  double s0 = 0.0, s2 = 0.0;
  if (spec.noise.g) {
    const Point zero{0.0, 0.0};
    for (std::size_t k = 1; k <= spec.noise.modes; ++k) {
      // |g_k| <= c_k on catalog families; recover c_k from the envelope.
      const double c = spec.noise.additive ? std::abs(spec.noise.g(k, zero, 0.0))
                                           : 2.0 * std::abs(spec.noise.g(k, Point{0.25 / k, 0.0}, 1.0));
      s0 += c * c;
      s2 += c * c * static_cast<double>(k * k);
    }
  }
  h.alpha = 1.0;
  if (spec.noise.additive) {
    h.growth_constant = std::max(s0, 1e-300) * (1.0 + 1e-9);
    h.modulus_constant = 1.0;
  } else {
    h.growth_constant = std::max(0.25 * s0, 1e-300) * (1.0 + 1e-9);
    // |sin a - sin b| <= |a - b| and |q(xi) - q(zeta)| <= |xi - zeta| for q = xi / (1 + xi^2).
    h.modulus_constant = std::max(2.0 * std::max(std::numbers::pi * std::numbers::pi * s2, s0), 1e-300);
  }
  return h;
}

// --- regularity exponent, truncation, mollification, phi_n -------------------

double regularity_exponent(double gamma, double alpha) {
  if (!(gamma > 0.5)) throw Error(ErrorKind::Domain, "gamma must exceed 1/2 for the Hoelder hypothesis on sigma");
  if (!(alpha > 0.0)) throw Error(ErrorKind::Domain, "alpha must be positive");
  return std::min((2.0 * gamma - 1.0) / (gamma + 1.0), 2.0 * alpha / (alpha + 1.0));
}

ProblemSpec truncate_flux(const ProblemSpec& spec, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::Domain, "truncation radius must be positive");
  ProblemSpec out = spec;
  const auto B = spec.flux.value;
  const auto b = spec.flux.derivative;
  const Vec Bp = B(R), Bm = B(-R), bp = b(R), bm = b(-R);
  out.flux.value = [=](double xi) {
    if (xi > R) return Vec{Bp[0] + bp[0] * (xi - R), Bp[1] + bp[1] * (xi - R)};
    if (xi < -R) return Vec{Bm[0] + bm[0] * (xi + R), Bm[1] + bm[1] * (xi + R)};
    return B(xi);
  };
  out.flux.derivative = [=](double xi) { return b(std::clamp(xi, -R, R)); };
  double lip = 0.0;
  const int n = 4001;
  for (int i = 0; i < n; ++i) lip = std::max(lip, vec_norm(b(R * (2.0 * i / (n - 1) - 1.0)), spec.dim));
  out.hyp.flux_degree = 1.0;
  out.hyp.flux_constant = 0.5 * std::max(lip, 1e-300) * (1.0 + 1e-9);
  return out;
}

namespace {

struct MollifierRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Bump exp(-1/(1 - z^2)) on (-1, 1), discretized by Gauss-Legendre on each
/// half so a kink at the center is resolved; weights normalized to unit mass.
const MollifierRule& mollifier_rule() {
  static const MollifierRule rule = [] {
    MollifierRule r;
    const auto& gl = quad::gauss_legendre(24);
    for (int side : {-1, 1}) {
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double z = side * 0.5 * (gl.nodes[i] + 1.0);
        r.nodes.push_back(z);
        r.weights.push_back(0.5 * gl.weights[i] * std::exp(-1.0 / (1.0 - z * z)));
      }
    }
    double mass = 0.0;
    for (double w : r.weights) mass += w;
    for (double& w : r.weights) w /= mass;
    return r;
  }();
  return rule;
}

template <class T, class F>
T convolve(F&& f, double xi, double eta, T zero) {
  const auto& r = mollifier_rule();
  T acc = zero;
  // Paired summation keeps the rule exactly symmetric.
  const std::size_t half = r.nodes.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const T lo = f(xi - eta * r.nodes[i]);
    const T hi = f(xi - eta * r.nodes[half + i]);
    acc = acc + (lo + hi) * r.weights[i];
  }
  return acc;
}

struct VecOps {
  Vec v;
  VecOps operator+(const VecOps& o) const { return {{v[0] + o.v[0], v[1] + o.v[1]}}; }
  VecOps operator*(double s) const { return {{v[0] * s, v[1] * s}}; }
};

struct MatOps {
  SmallMatrix m;
  MatOps operator+(const MatOps& o) const {
    MatOps r = *this;
    for (int i = 0; i < 4; ++i) r.m.a[i] += o.m.a[i];
    return r;
  }
  MatOps operator*(double s) const {
    MatOps r = *this;
    for (double& x : r.m.a) x *= s;
    return r;
  }
};

}  // namespace

double mollify_scalar(const std::function<double(double)>& f, double xi, double eta) {
  return convolve(f, xi, eta, 0.0);
}

ProblemSpec mollify_coefficients(const ProblemSpec& spec, double eta) {
  if (!(eta > 0.0)) throw Error(ErrorKind::Domain, "mollification width must be positive");
  ProblemSpec out = spec;
  const int dim = spec.dim;
  const auto B = spec.flux.value;
  const auto b = spec.flux.derivative;
  out.flux.value = [=](double xi) { return convolve([&](double z) { return VecOps{B(z)}; }, xi, eta, VecOps{}).v; };
  out.flux.derivative = [=](double xi) {
    return convolve([&](double z) { return VecOps{b(z)}; }, xi, eta, VecOps{}).v;
  };
  if (!spec.diffusion.constant) {
    const auto A = spec.diffusion.matrix;
    const ProblemSpec base = spec;
    out.diffusion.matrix = [=](double xi) {
      return convolve([&](double z) { return MatOps{A(z)}; }, xi, eta, MatOps{SmallMatrix::zero(dim)}).m;
    };
    out.diffusion.root = {};
    // (rho * Abar)' = rho * A, shifted so the antiderivative vanishes at 0.
    const auto conv_bar = [=](double xi) {
      return convolve([&](double z) { return MatOps{base.A_bar(z)}; }, xi, eta, MatOps{SmallMatrix::zero(dim)}).m;
    };
    const SmallMatrix at_zero = conv_bar(0.0);
    out.diffusion.antiderivative = [=](double xi) { return conv_bar(xi) - at_zero; };
    out.diffusion.root_antiderivative = {};
  }
  if (spec.noise.g && !spec.noise.additive) {
    const auto g = spec.noise.g;
    out.noise.g = [=](std::size_t k, const Point& x, double xi) {
      return convolve([&](double z) { return g(k, x, z); }, xi, eta, 0.0);
    };
  }
  return out;
}

double eval_phi_n(double xi, int n, double p) {
  if (p < 2.0) throw Error(ErrorKind::Domain, "phi_n requires p >= 2");
  if (n < 1) throw Error(ErrorKind::Domain, "phi_n requires n >= 1");
  const double a = std::abs(xi), nn = n;
  if (a <= nn) return std::pow(a, p);
  return std::pow(nn, p - 2.0) *
         (0.5 * p * (p - 1.0) * xi * xi - p * (p - 2.0) * nn * a + 0.5 * (p - 1.0) * (p - 2.0) * nn * nn);
}

double eval_phi_n_d1(double xi, int n, double p) {
  if (p < 2.0) throw Error(ErrorKind::Domain, "phi_n requires p >= 2");
  if (n < 1) throw Error(ErrorKind::Domain, "phi_n requires n >= 1");
  const double a = std::abs(xi), nn = n, s = xi < 0 ? -1.0 : 1.0;
  if (a <= nn) return s * p * std::pow(a, p - 1.0);
  return std::pow(nn, p - 2.0) * (p * (p - 1.0) * xi - s * p * (p - 2.0) * nn);
}

double eval_phi_n_d2(double xi, int n, double p) {
  if (p < 2.0) throw Error(ErrorKind::Domain, "phi_n requires p >= 2");
  if (n < 1) throw Error(ErrorKind::Domain, "phi_n requires n >= 1");
  const double a = std::abs(xi), nn = n;
  if (a <= nn) return p * (p - 1.0) * std::pow(a, p - 2.0);
  return std::pow(nn, p - 2.0) * p * (p - 1.0);
}

}  // namespace kinlab
