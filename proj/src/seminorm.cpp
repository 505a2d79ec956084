#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "kinlab/diagnostics.hpp"
#include "kinlab/quadrature.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

RadialKernel kernel_from_string(const std::string& s) {
  if (s == "bump") return RadialKernel::Bump;
  if (s == "hat") return RadialKernel::Hat;
  if (s == "indicator") return RadialKernel::Indicator;
  throw Error(ErrorKind::Domain, "unknown radial kernel '" + s + "'");
}

const char* to_string(RadialKernel k) {
  switch (k) {
    case RadialKernel::Bump: return "bump";
    case RadialKernel::Hat: return "hat";
    case RadialKernel::Indicator: return "indicator";
  }
  return "bump";
}

namespace {

/// Offset in cells, wrapped into (-M/2, M/2].
struct Offset {
  long m[2];
};

long wrapped(long m, long M) { return m > M / 2 ? m - M : m; }

/// Torus distance along one axis for a displacement z measured in cells.
double axis_distance(double z, double M) {
  z = std::abs(z);
  z = std::fmod(z, M);
  return std::min(z, M - z);
}

/// sum_x |u(x) - u(x + m)|.
double shifted_l1(const ScalarField& u, const Offset& o) {
  const TorusGrid& g = u.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::size_t k = g.neighbour(i, 0, o.m[0]);
    if (g.dim() == 2) k = g.neighbour(k, 1, o.m[1]);
    s += std::abs(u[i] - u[k]);
  }
  return s;
}

/// Tent-weighted integral over r in [-1,1]^N of f(m + r), split at r = 0 and
/// at the torus fold so each piece is smooth.
double tent_integral_1d(const std::function<double(double)>& f, double m, double M, int nodes) {
  std::vector<double> cuts{-1.0, 0.0, 1.0};
  for (double fold : {M / 2.0 - m, -M / 2.0 - m, M - m, -M - m})
    if (fold > -1.0 && fold < 1.0) cuts.push_back(fold);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    if (cuts[c + 1] - cuts[c] < 1e-15) continue;
    s += quad::integrate_fixed([&](double r) { return (1.0 - std::abs(r)) * f(m + r); }, cuts[c], cuts[c + 1], nodes);
  }
  return s;
}

/// Adaptive tensor quadrature of a 2D function on a square.
double adaptive_square(const std::function<double(double, double)>& f, double x0, double x1, double y0, double y1,
                       double whole, int depth) {
  const auto& rule = quad::gauss_legendre(6);
  auto apply = [&](double a0, double a1, double b0, double b1) {
    double s = 0.0;
    const double ca = 0.5 * (a0 + a1), ha = 0.5 * (a1 - a0), cb = 0.5 * (b0 + b1), hb = 0.5 * (b1 - b0);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      for (std::size_t j = 0; j < rule.nodes.size(); ++j)
        s += rule.weights[i] * rule.weights[j] * f(ca + ha * rule.nodes[i], cb + hb * rule.nodes[j]);
    return s * ha * hb;
  };
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  const double q[4] = {apply(x0, xm, y0, ym), apply(xm, x1, y0, ym), apply(x0, xm, ym, y1), apply(xm, x1, ym, y1)};
  const double sum = q[0] + q[1] + q[2] + q[3];
  if (depth <= 0 || std::abs(sum - whole) <= 1e-9 * std::abs(sum) + 1e-15) return sum;
  return adaptive_square(f, x0, xm, y0, ym, q[0], depth - 1) + adaptive_square(f, xm, x1, y0, ym, q[1], depth - 1) +
         adaptive_square(f, x0, xm, ym, y1, q[2], depth - 1) + adaptive_square(f, xm, x1, ym, y1, q[3], depth - 1);
}

double tent_integral_2d(const std::function<double(double, double)>& f, const Offset& o, double M, bool singular) {
  auto integrand = [&](double r1, double r2) {
    return (1.0 - std::abs(r1)) * (1.0 - std::abs(r2)) * f(o.m[0] + r1, o.m[1] + r2);
  };
  double s = 0.0;
  for (double x0 : {-1.0, 0.0})
    for (double y0 : {-1.0, 0.0}) {
      if (singular) {
        s += adaptive_square(integrand, x0, x0 + 1.0, y0, y0 + 1.0, 0.0, 14);
      } else {
        const auto& rule = quad::gauss_legendre(8);
        double q = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
          for (std::size_t j = 0; j < rule.nodes.size(); ++j)
            q += rule.weights[i] * rule.weights[j] *
                 integrand(x0 + 0.5 * (rule.nodes[i] + 1.0), y0 + 0.5 * (rule.nodes[j] + 1.0));
        s += 0.25 * q;
      }
    }
  (void)M;
  return s;
}

/// sum over offsets of weight(o) * shifted_l1(u, o), exact in 1D; in 2D exact
/// for near shells and stratified sampling for the rest.
SeminormEstimate pair_sum(const ScalarField& u, const std::function<double(const Offset&)>& weight,
                          const SeminormOptions& opts) {
  const TorusGrid& g = u.grid();
  const long M = static_cast<long>(g.points());
  SeminormEstimate est;
  if (g.dim() == 1) {
    for (long m = 1; m < M; ++m) {
      const Offset o{{wrapped(m, M), 0}};
      const double w = weight(o);
      if (w != 0.0) est.value += w * shifted_l1(u, o);
    }
    return est;
  }
  std::map<long, std::vector<Offset>> shells;
  for (long a = 0; a < M; ++a)
    for (long b = 0; b < M; ++b) {
      if (a == 0 && b == 0) continue;
      const Offset o{{wrapped(a, M), wrapped(b, M)}};
      shells[std::max(std::abs(o.m[0]), std::abs(o.m[1]))].push_back(o);
    }
  rng::SplitMix gen(opts.seed);
  double var = 0.0;
  for (const auto& [radius, members] : shells) {
    if (radius <= static_cast<long>(opts.exact_radius) || members.size() <= opts.samples_per_shell) {
      for (const auto& o : members) {
        const double w = weight(o);
        if (w != 0.0) est.value += w * shifted_l1(u, o);
      }
      continue;
    }
    const std::size_t n = opts.samples_per_shell;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& o = members[static_cast<std::size_t>(gen.uniform() * static_cast<double>(members.size()))];
      const double w = weight(o);
      const double y = w == 0.0 ? 0.0 : w * shifted_l1(u, o);
      s1 += y;
      s2 += y * y;
    }
    const double size = static_cast<double>(members.size());
    const double mean = s1 / n;
    const double sample_var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    est.value += size * mean;
    var += size * size * sample_var / n;
  }
  est.sampling_error = std::sqrt(var);
  return est;
}

/// Second antiderivative of z^{-1-lambda}.
double g2(double z, double lambda) { return z <= 0.0 ? 0.0 : std::pow(z, 1.0 - lambda) / (-lambda * (1.0 - lambda)); }

using KernelKey = std::tuple<int, std::size_t, double>;

std::mutex kernel_mu;
std::map<KernelKey, std::map<std::pair<long, long>, double>> kernel_cache;

double singular_weight(const Offset& o, const TorusGrid& g, double lambda) {
  const double M = static_cast<double>(g.points());
  const double h = g.h();
  if (g.dim() == 1) {
    const double m = std::abs(static_cast<double>(o.m[0]));
    double J;
    if (m + 1.0 <= M / 2.0) {
      J = g2(m + 1.0, lambda) - 2.0 * g2(m, lambda) + g2(m - 1.0, lambda);
    } else {
      J = tent_integral_1d([&](double z) { return std::pow(axis_distance(z, M), -1.0 - lambda); }, m, M, 32);
    }
    return std::pow(h, 1.0 - lambda) * J;
  }
  const bool near = std::max(std::abs(o.m[0]), std::abs(o.m[1])) <= 2;
  const double J = tent_integral_2d(
      [&](double z1, double z2) {
        const double d = std::hypot(axis_distance(z1, M), axis_distance(z2, M));
        return std::pow(d, -2.0 - lambda);
      },
      o, M, near);
  return std::pow(h, 2.0 - lambda) * J;
}

double normalization(RadialKernel k, int dim) {
  static const double bump1 = quad::integrate([](double r) { return std::exp(-1.0 / (1.0 - r * r)); }, -1.0 + 1e-15, 1.0 - 1e-15, 1e-13);
  static const double bump2 =
      2.0 * std::numbers::pi * quad::integrate([](double r) { return r * std::exp(-1.0 / (1.0 - r * r)); }, 0.0, 1.0 - 1e-15, 1e-13);
  switch (k) {
    case RadialKernel::Bump: return dim == 1 ? bump1 : bump2;
    case RadialKernel::Hat: return dim == 1 ? 1.0 : std::numbers::pi / 3.0;
    case RadialKernel::Indicator: return dim == 1 ? 2.0 : std::numbers::pi;
  }
  return 1.0;
}

double profile(RadialKernel k, double r) {
  if (r >= 1.0) return 0.0;
  switch (k) {
    case RadialKernel::Bump: return std::exp(-1.0 / (1.0 - r * r));
    case RadialKernel::Hat: return 1.0 - r;
    case RadialKernel::Indicator: return 1.0;
  }
  return 0.0;
}

}  // namespace

SeminormEstimate seminorm_p(const ScalarField& u, double lambda, const SeminormOptions& opts) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::Domain, "seminorm order must lie in (0, 1)");
  const TorusGrid& g = u.grid();
  const KernelKey key{g.dim(), g.points(), lambda};
  auto weight = [&](const Offset& o) {
    const std::pair<long, long> k{o.m[0], o.m[1]};
    {
      std::lock_guard lock(kernel_mu);
      auto& table = kernel_cache[key];
      auto it = table.find(k);
      if (it != table.end()) return it->second;
    }
    const double w = singular_weight(o, g, lambda);
    std::lock_guard lock(kernel_mu);
    kernel_cache[key][k] = w;
    return w;
  };
  return pair_sum(u, weight, opts);
}

SeminormReport seminorm_rho(const ScalarField& u, double lambda, RadialKernel kernel, std::size_t eps_points,
                            const SeminormOptions& opts) {
  if (eps_points < 2) throw Error(ErrorKind::Domain, "eps grid needs at least two points");
  const TorusGrid& g = u.grid();
  const int dim = g.dim();
  const double h = g.h();
  const double M = static_cast<double>(g.points());
  const double diameter = std::sqrt(static_cast<double>(dim));
  const double norm = normalization(kernel, dim);

  SeminormReport rep;
  rep.lambda = lambda;
  const auto p = seminorm_p(u, lambda, opts);
  rep.p_lambda = p.value;
  rep.p_lambda_error = p.sampling_error;

  const double e0 = 2.0 * h, e1 = 2.0 * diameter;
  for (std::size_t k = 0; k < eps_points; ++k) {
    const double eps = e0 * std::pow(e1 / e0, static_cast<double>(k) / static_cast<double>(eps_points - 1));
    const int images = static_cast<int>(std::ceil(eps)) + 1;
    // Periodized kernel evaluated at a displacement z measured in cells.
    auto rho_t1 = [&](double z) {
      double s = 0.0;
      for (int n = -images; n <= images; ++n) s += profile(kernel, std::abs(z * h + n) / eps);
      return s / (norm * eps);
    };
    auto rho_t2 = [&](double z1, double z2) {
      double s = 0.0;
      for (int a = -images; a <= images; ++a)
        for (int b = -images; b <= images; ++b) s += profile(kernel, std::hypot(z1 * h + a, z2 * h + b) / eps);
      return s / (norm * eps * eps);
    };
    auto weight = [&](const Offset& o) {
      if (dim == 1) {
        const double m = static_cast<double>(o.m[0]);
        if (std::abs(m) * h - h > eps && std::abs(m) * h + h < 1.0 - eps) return 0.0;
        return h * h * tent_integral_1d(rho_t1, m, M, 16);
      }
      const double d = std::hypot(axis_distance(o.m[0], M), axis_distance(o.m[1], M)) * h;
      if (d - 1.5 * h > eps && eps < 0.5) return 0.0;
      double s = 0.0;
      const auto& rule = quad::gauss_legendre(8);
      for (double x0 : {-1.0, 0.0})
        for (double y0 : {-1.0, 0.0})
          for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
              const double r1 = x0 + 0.5 * (rule.nodes[i] + 1.0), r2 = y0 + 0.5 * (rule.nodes[j] + 1.0);
              s += 0.25 * rule.weights[i] * rule.weights[j] * (1.0 - std::abs(r1)) * (1.0 - std::abs(r2)) *
                   rho_t2(o.m[0] + r1, o.m[1] + r2);
            }
      return h * h * h * h * s;
    };
    const double integral = pair_sum(u, weight, opts).value;
    const double v = integral / std::pow(eps, lambda);
    rep.eps.push_back(eps);
    rep.values.push_back(v);
    rep.p_rho = std::max(rep.p_rho, v);
  }
  return rep;
}

}  // namespace kinlab
