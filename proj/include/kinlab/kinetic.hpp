#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "kinlab/grid.hpp"
#include "kinlab/model.hpp"
#include "kinlab/noise.hpp"
#include "kinlab/solver.hpp"

namespace kinlab {

/// Velocity nodes xi_j = xi_min + j * dxi, j = 0..points-1. Bin j is the
/// interval of half-width dxi/2 around xi_j.
class VelocityGrid {
 public:
  VelocityGrid(double xi_min, double xi_max, std::size_t points);
  /// Grid over [lo, hi] widened by a margin of two spacings on each side.
  static VelocityGrid covering(double lo, double hi, std::size_t points);

  double xi_min() const { return lo_; }
  double xi_max() const { return hi_; }
  std::size_t points() const { return n_; }
  double spacing() const { return d_; }
  double xi(std::size_t j) const { return lo_ + d_ * static_cast<double>(j); }
  /// Nearest node; throws Error(Range) outside the grid.
  std::size_t bin_of(double v) const;

 private:
  double lo_, hi_;
  std::size_t n_;
  double d_;
};

/// f(x_i, xi_j) = 1_{u(x_i) > xi_j}, stored cell-major.
class KineticField {
 public:
  KineticField(std::size_t cells, std::size_t velocities, std::vector<std::uint8_t> values)
      : cells_(cells), nv_(velocities), f_(std::move(values)) {}
  std::size_t cells() const { return cells_; }
  std::size_t velocities() const { return nv_; }
  int operator()(std::size_t cell, std::size_t j) const { return f_[cell * nv_ + j]; }

  /// Nonincreasing in xi, 1 at xi_min and 0 at xi_max for every cell.
  bool satisfies_invariants() const;

 private:
  std::size_t cells_, nv_;
  std::vector<std::uint8_t> f_;
};

/// Throws Error(Range) unless xi_min < u <= xi_max everywhere.
KineticField kinetic_function(const ScalarField& u, const VelocityGrid& vgrid);

/// dxi * sum_j (f(x, xi_j) - 1_{0 > xi_j}), recovering u(x) to within dxi.
ScalarField reconstruct(const KineticField& f, const VelocityGrid& vgrid, const TorusGrid& grid);

/// L1 norm over the torus of div_h[int_0^u phi sigma] - phi(u) div_h[int_0^u sigma],
/// both antiderivatives by the same quadrature.
double chain_rule_residual(const ScalarField& u, const ProblemSpec& spec, const std::function<double(double)>& phi);

struct MeasureDeposit {
  std::size_t t_index;
  std::size_t x_index;
  std::size_t xi_bin;
  double n1;
  double n2;
};

struct KineticMeasureEstimate {
  VelocityGrid vgrid;
  std::vector<double> times;
  std::vector<double> weights;  // trapezoid time weights per snapshot
  std::vector<MeasureDeposit> deposits;
  double total_n1 = 0.0;
  double total_n2 = 0.0;
};

/// Bins |div_h Sigma(u)|^2 (n1) and tau |grad_h u|^2 (n2) at the velocity of
/// u(t_j, x_i). Nearest-bin deposition by default; `smoothed` splits each
/// deposit linearly between the two neighbouring nodes.
KineticMeasureEstimate estimate_measures(const Trajectory& traj, const ProblemSpec& spec, const VelocityGrid& vgrid,
                                         bool smoothed = false);

/// n1 + n2 mass in bins that are not contained in [-R, R].
double vanishing_xi_mass(const KineticMeasureEstimate& est, double R);

void write_measures_csv(std::ostream& os, const KineticMeasureEstimate& est);

/// phi(t, x, xi) = a(t) b(x) c(xi) with a(t) = (1 - t/T)^time_power,
/// b(x) = offset + cos_coeff cos(2 pi k.x) + sin_coeff sin(2 pi k.x),
/// c(xi) = (1 - s^2)^3, s = (xi - xi_center)/xi_width on |s| < 1.
struct KineticTestFunction {
  int time_power = 2;
  int kx = 1, ky = 0;
  double offset = 1.0;
  double cos_coeff = 0.5;
  double sin_coeff = 0.0;
  double xi_center = 0.0;
  double xi_width = 1.0;

  double a(double t, double T) const;
  double bx(const Point& x) const;
  Vec grad_bx(const Point& x) const;
  SmallMatrix hess_bx(const Point& x, int dim) const;
  double c(double xi) const;
  double dc(double xi) const;

  bool operator==(const KineticTestFunction&) const = default;
};

struct KineticResidual {
  double time_term = 0.0;
  double initial_term = 0.0;
  double transport_term = 0.0;
  double diffusion_term = 0.0;
  double stochastic_term = 0.0;
  double ito_term = 0.0;
  double measure_term = 0.0;
  double defect = 0.0;  // left side minus right side

  double abs() const { return defect < 0 ? -defect : defect; }
};

/// Every term of the weak kinetic formulation assembled over a trajectory
/// that stores every time step. The stochastic integral uses the path's own
/// increments at the left point.
KineticResidual kinetic_residual(const Trajectory& traj, const ProblemSpec& spec, const NoisePath& path,
                                 const KineticTestFunction& test, const VelocityGrid& vgrid,
                                 const KineticMeasureEstimate& est);

}  // namespace kinlab
