#pragma once

#include <functional>
#include <vector>

namespace kinlab::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre rule with `n` points, computed by Newton iteration on P_n.
/// Rules are cached per n; the returned reference stays valid for the
/// lifetime of the process.
const Rule& gauss_legendre(int n);

/// Fixed-order rule mapped to [a, b].
double integrate_fixed(const std::function<double(double)>& f, double a, double b, int n = 16);

/// Adaptive bisection comparing 8- and 16-point Gauss-Legendre estimates,
/// relative tolerance `rel_tol` with absolute floor `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-14, int max_depth = 40);

}  // namespace kinlab::quad
