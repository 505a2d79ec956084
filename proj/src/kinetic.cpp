#include "kinlab/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "kinlab/quadrature.hpp"

namespace kinlab {

VelocityGrid::VelocityGrid(double xi_min, double xi_max, std::size_t points)
    : lo_(xi_min), hi_(xi_max), n_(points), d_(0.0) {
  if (points < 2 || !(xi_max > xi_min)) throw Error(ErrorKind::Domain, "velocity grid needs xi_max > xi_min and >= 2 points");
  d_ = (hi_ - lo_) / static_cast<double>(n_ - 1);
}

VelocityGrid VelocityGrid::covering(double lo, double hi, std::size_t points) {
  if (points < 6) throw Error(ErrorKind::Domain, "covering velocity grid needs at least 6 points");
  if (hi <= lo) hi = lo + 1e-6;
  // Two spacings of margin on each side: d = (hi - lo) / (points - 5).
  const double d = (hi - lo) / static_cast<double>(points - 5);
  return VelocityGrid(lo - 2.0 * d, hi + 2.0 * d, points);
}

std::size_t VelocityGrid::bin_of(double v) const {
  const double q = std::round((v - lo_) / d_);
  if (!(q >= 0.0) || q > static_cast<double>(n_ - 1)) {
    std::ostringstream os;
    os << "state value " << v << " outside velocity grid [" << lo_ << ", " << hi_ << "]";
    throw Error(ErrorKind::Range, os.str());
  }
  return static_cast<std::size_t>(q);
}

bool KineticField::satisfies_invariants() const {
  for (std::size_t c = 0; c < cells_; ++c) {
    if ((*this)(c, 0) != 1 || (*this)(c, nv_ - 1) != 0) return false;
    for (std::size_t j = 1; j < nv_; ++j)
      if ((*this)(c, j) > (*this)(c, j - 1)) return false;
  }
  return true;
}

KineticField kinetic_function(const ScalarField& u, const VelocityGrid& vgrid) {
  if (!(u.min() > vgrid.xi_min()) || u.max() > vgrid.xi_max()) {
    std::ostringstream os;
    os << "velocity grid [" << vgrid.xi_min() << ", " << vgrid.xi_max() << "] does not cover state range [" << u.min()
       << ", " << u.max() << "]";
    throw Error(ErrorKind::Range, os.str());
  }
  const std::size_t nv = vgrid.points();
  std::vector<std::uint8_t> f(u.size() * nv);
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < nv; ++j) f[i * nv + j] = u[i] > vgrid.xi(j) ? 1 : 0;
  return KineticField(u.size(), nv, std::move(f));
}

ScalarField reconstruct(const KineticField& f, const VelocityGrid& vgrid, const TorusGrid& grid) {
  ScalarField u(grid);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.velocities(); ++j) s += f(i, j) - (vgrid.xi(j) < 0.0 ? 1.0 : 0.0);
    u[i] = s * vgrid.spacing();
  }
  return u;
}

namespace {

/// int_0^v weight(z) sigma(z) dz, entrywise.
SmallMatrix weighted_root_antiderivative(const ProblemSpec& spec, const std::function<double(double)>& weight,
                                         double v) {
  SmallMatrix r = SmallMatrix::zero(spec.dim);
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j)
      r(i, j) = quad::integrate([&](double z) { return weight(z) * spec.sigma(z)(i, j); }, 0.0, v, 1e-12, 1e-15);
  return r;
}

/// (div M)_j = sum_i d_i M_ij with centered differences, per cell.
std::vector<Vec> centered_matrix_div(const std::vector<SmallMatrix>& m, const TorusGrid& g) {
  std::vector<Vec> out(m.size(), Vec{0.0, 0.0});
  const double inv = 0.5 / g.h();
  for (std::size_t c = 0; c < m.size(); ++c)
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        out[c][j] += (m[g.neighbour(c, i, 1)](i, j) - m[g.neighbour(c, i, -1)](i, j)) * inv;
  return out;
}

double sq(const Vec& v) { return v[0] * v[0] + v[1] * v[1]; }

}  // namespace

double chain_rule_residual(const ScalarField& u, const ProblemSpec& spec, const std::function<double(double)>& phi) {
  const TorusGrid& g = u.grid();
  const auto one = [](double) { return 1.0; };
  std::vector<SmallMatrix> weighted(u.size()), plain(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    weighted[i] = weighted_root_antiderivative(spec, phi, u[i]);
    plain[i] = weighted_root_antiderivative(spec, one, u[i]);
  }
  const auto lhs = centered_matrix_div(weighted, g);
  const auto rhs = centered_matrix_div(plain, g);
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = phi(u[i]);
    total += std::sqrt(sq(Vec{lhs[i][0] - p * rhs[i][0], lhs[i][1] - p * rhs[i][1]}));
  }
  return total * g.cell_volume();
}

KineticMeasureEstimate estimate_measures(const Trajectory& traj, const ProblemSpec& spec, const VelocityGrid& vgrid,
                                         bool smoothed) {
  KineticMeasureEstimate est{vgrid, traj.times, {}, {}, 0.0, 0.0};
  const std::size_t nt = traj.size();
  est.weights.assign(nt, 0.0);
  for (std::size_t j = 0; j + 1 < nt; ++j) {
    const double w = 0.5 * (traj.times[j + 1] - traj.times[j]);
    est.weights[j] += w;
    est.weights[j + 1] += w;
  }
  const TorusGrid& g = traj.grid;
  const double vol = g.cell_volume();
  const double tau = traj.params.tau;
  for (std::size_t j = 0; j < nt; ++j) {
    const ScalarField& u = traj.fields[j];
    std::vector<SmallMatrix> roots(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) roots[i] = spec.Sigma(u[i]);
    const auto div_sigma = centered_matrix_div(roots, g);
    const VectorField gu = grad(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      double grad2 = 0.0;
      for (const auto& c : gu) grad2 += c[i] * c[i];
      const double n1 = sq(div_sigma[i]) * vol * est.weights[j];
      const double n2 = tau * grad2 * vol * est.weights[j];
      est.total_n1 += n1;
      est.total_n2 += n2;
      if (!smoothed) {
        est.deposits.push_back({j, i, vgrid.bin_of(u[i]), n1, n2});
        continue;
      }
      vgrid.bin_of(u[i]);  // range check
      const double q = std::clamp((u[i] - vgrid.xi_min()) / vgrid.spacing(), 0.0, static_cast<double>(vgrid.points() - 1));
      const auto lo = std::min(static_cast<std::size_t>(q), vgrid.points() - 2);
      const double frac = q - static_cast<double>(lo);
      est.deposits.push_back({j, i, lo, (1.0 - frac) * n1, (1.0 - frac) * n2});
      est.deposits.push_back({j, i, lo + 1, frac * n1, frac * n2});
    }
  }
  return est;
}

double vanishing_xi_mass(const KineticMeasureEstimate& est, double R) {
  const double half = 0.5 * est.vgrid.spacing();
  double mass = 0.0;
  for (const auto& d : est.deposits) {
    const double xi = est.vgrid.xi(d.xi_bin);
    if (std::max(std::abs(xi - half), std::abs(xi + half)) > R) mass += d.n1 + d.n2;
  }
  return mass;
}

void write_measures_csv(std::ostream& os, const KineticMeasureEstimate& est) {
  os << "t_bin,x_index,xi_bin,n1_mass,n2_mass\n" << std::setprecision(17);
  for (const auto& d : est.deposits) os << d.t_index << ',' << d.x_index << ',' << d.xi_bin << ',' << d.n1 << ',' << d.n2 << '\n';
}

// --- test function -----------------------------------------------------------

double KineticTestFunction::a(double t, double T) const {
  const double s = std::max(0.0, 1.0 - t / T);
  return std::pow(s, time_power);
}

double KineticTestFunction::bx(const Point& x) const {
  const double th = 2.0 * std::numbers::pi * (kx * x[0] + ky * x[1]);
  return offset + cos_coeff * std::cos(th) + sin_coeff * std::sin(th);
}

Vec KineticTestFunction::grad_bx(const Point& x) const {
  const double th = 2.0 * std::numbers::pi * (kx * x[0] + ky * x[1]);
  const double d = 2.0 * std::numbers::pi * (-cos_coeff * std::sin(th) + sin_coeff * std::cos(th));
  return {d * kx, d * ky};
}

SmallMatrix KineticTestFunction::hess_bx(const Point& x, int dim) const {
  const double th = 2.0 * std::numbers::pi * (kx * x[0] + ky * x[1]);
  const double w = 2.0 * std::numbers::pi;
  const double d = -w * w * (cos_coeff * std::cos(th) + sin_coeff * std::sin(th));
  SmallMatrix h = SmallMatrix::zero(dim);
  const double k[2] = {static_cast<double>(kx), static_cast<double>(ky)};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) h(i, j) = d * k[i] * k[j];
  return h;
}

double KineticTestFunction::c(double xi) const {
  const double s = (xi - xi_center) / xi_width;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return q * q * q;
}

double KineticTestFunction::dc(double xi) const {
  const double s = (xi - xi_center) / xi_width;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return -6.0 * s * q * q / xi_width;
}

namespace {

/// Cumulative int_{xi_min}^v h(xi) dxi, tabulated on the velocity nodes with
/// 8-point Gauss-Legendre per cell.
class XiAntiderivative {
 public:
  XiAntiderivative(std::function<double(double)> f, const VelocityGrid& vg) : f_(std::move(f)), vg_(vg) {
    cum_.assign(vg.points(), 0.0);
    for (std::size_t j = 0; j + 1 < vg.points(); ++j)
      cum_[j + 1] = cum_[j] + quad::integrate_fixed(f_, vg.xi(j), vg.xi(j + 1), 8);
  }
  double operator()(double v) const {
    if (v <= vg_.xi_min()) return 0.0;
    const double q = (v - vg_.xi_min()) / vg_.spacing();
    const auto j = std::min(static_cast<std::size_t>(q), vg_.points() - 1);
    return cum_[j] + quad::integrate_fixed(f_, vg_.xi(j), v, 8);
  }

 private:
  std::function<double(double)> f_;
  const VelocityGrid& vg_;
  std::vector<double> cum_;
};

}  // namespace

KineticResidual kinetic_residual(const Trajectory& traj, const ProblemSpec& spec_in, const NoisePath& path,
                                 const KineticTestFunction& test, const VelocityGrid& vgrid,
                                 const KineticMeasureEstimate& est) {
  if (test.xi_center - test.xi_width < vgrid.xi_min() || test.xi_center + test.xi_width > vgrid.xi_max())
    throw Error(ErrorKind::Precondition, "test function support in xi exceeds the velocity grid");
  for (std::size_t j = 0; j < traj.size(); ++j)
    if (traj.steps[j] != j) throw Error(ErrorKind::Precondition, "kinetic residual needs a snapshot at every step");
  if (traj.size() < 2) throw Error(ErrorKind::Precondition, "kinetic residual needs at least one step");
  const std::size_t nsteps = traj.size() - 1;
  if (path.modes() > 0 && path.steps() < nsteps) throw Error(ErrorKind::Precondition, "noise path shorter than trajectory");

  const ProblemSpec spec = effective_spec(spec_in, traj.params);
  const TorusGrid& g = traj.grid;
  const int dim = g.dim();
  const double vol = g.cell_volume();
  const double T = traj.times.back();
  const double dt = traj.params.dt;
  const double tau = traj.params.tau;

  const XiAntiderivative C([&](double xi) { return test.c(xi); }, vgrid);
  std::vector<XiAntiderivative> Q;
  for (int d = 0; d < dim; ++d) Q.emplace_back([&, d](double xi) { return spec.b(xi)[d] * test.c(xi); }, vgrid);
  std::vector<XiAntiderivative> D;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      D.emplace_back(
          [&, a, b](double xi) { return (spec.A(xi)(a, b) + (a == b ? tau : 0.0)) * test.c(xi); }, vgrid);

  std::vector<double> bxs(g.size());
  std::vector<Vec> gbs(g.size());
  std::vector<SmallMatrix> hbs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.center(i);
    bxs[i] = test.bx(x);
    gbs[i] = test.grad_bx(x);
    hbs[i] = test.hess_bx(x, dim);
  }

  KineticResidual r;
  for (std::size_t n = 0; n <= nsteps; ++n) {
    const ScalarField& u = traj.fields[n];
    const double an = test.a(traj.times[n], T);
    double pair = 0.0;  // <f_n, b c>
    for (std::size_t i = 0; i < u.size(); ++i) pair += bxs[i] * C(u[i]);
    pair *= vol;
    if (n == 0) r.initial_term = an * pair;
    if (n == nsteps) break;
    r.time_term += (test.a(traj.times[n + 1], T) - an) * pair;

    double transport = 0.0, diffusion = 0.0, stochastic = 0.0, ito = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (int d = 0; d < dim; ++d) transport += gbs[i][d] * Q[d](u[i]);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) diffusion += hbs[i](a, b) * D[a * dim + b](u[i]);
      if (path.modes() > 0 && spec.noise.g) {
        const Point x = g.center(i);
        const double ci = test.c(u[i]), dci = test.dc(u[i]);
        double noise = 0.0, g2 = 0.0;
        for (std::size_t k = 1; k <= path.modes(); ++k) {
          const double gk = spec.noise.g(k, x, u[i]);
          noise += gk * path.increment(k, n);
          g2 += gk * gk;
        }
        stochastic += noise * bxs[i] * ci;
        ito += g2 * bxs[i] * dci;
      }
    }
    r.transport_term += dt * an * transport * vol;
    r.diffusion_term += dt * an * diffusion * vol;
    r.stochastic_term -= an * stochastic * vol;
    r.ito_term -= 0.5 * dt * an * ito * vol;
  }
  for (const auto& dep : est.deposits) {
    const double t = est.times[dep.t_index];
    r.measure_term += (dep.n1 + dep.n2) * test.a(t, T) * bxs[dep.x_index] * test.dc(vgrid.xi(dep.xi_bin));
  }
  const double lhs = r.time_term + r.initial_term + r.transport_term + r.diffusion_term;
  const double rhs = r.stochastic_term + r.ito_term + r.measure_term;
  r.defect = lhs - rhs;
  return r;
}

}  // namespace kinlab
