#include "kinlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace kinlab::quad {

namespace {

Rule build_rule(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

double apply(const Rule& r, const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + half * r.nodes[i]);
  return s * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double coarse, double rel_tol,
             double abs_tol, int depth) {
  const Rule& fine_rule = gauss_legendre(16);
  double fine = apply(fine_rule, f, a, b);
  double err = std::abs(fine - coarse);
  if (err <= std::max(abs_tol, rel_tol * std::abs(fine)) || depth <= 0) return fine;
  const double m = 0.5 * (a + b);
  const Rule& r8 = gauss_legendre(8);
  double left = apply(r8, f, a, m);
  double right = apply(r8, f, m, b);
  return adapt(f, a, m, left, rel_tol, 0.5 * abs_tol, depth - 1) +
         adapt(f, m, b, right, rel_tol, 0.5 * abs_tol, depth - 1);
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double integrate_fixed(const std::function<double(double)>& f, double a, double b, int n) {
  return apply(gauss_legendre(n), f, a, b);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol,
                 int max_depth) {
  if (a == b) return 0.0;
  double coarse = apply(gauss_legendre(8), f, a, b);
  return adapt(f, a, b, coarse, rel_tol, abs_tol, max_depth);
}

}  // namespace kinlab::quad
