#include "kinlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

namespace kinlab {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Eta: return "eta";
    case Scheme::R: return "R";
    case Scheme::Tau: return "tau";
  }
  return "tau";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "eta" || s == "eta-scheme") return Scheme::Eta;
  if (s == "R" || s == "R-scheme") return Scheme::R;
  if (s == "tau" || s == "tau-scheme") return Scheme::Tau;
  throw Error(ErrorKind::Domain, "unknown scheme '" + s + "'");
}

std::size_t RegularizationParams::steps() const {
  return static_cast<std::size_t>(std::llround(T / dt));
}

void validate(const RegularizationParams& p) {
  if (!(p.dt > 0.0)) throw Error(ErrorKind::Precondition, "dt must be positive");
  if (!(p.T >= 0.0)) throw Error(ErrorKind::Precondition, "T must be nonnegative");
  if (std::abs(p.T / p.dt - static_cast<double>(p.steps())) > 1e-9 * std::max(1.0, p.T / p.dt))
    throw Error(ErrorKind::Precondition, "T must be a multiple of dt");
  if (p.eta < 0.0 || p.tau < 0.0 || p.mollify < 0.0)
    throw Error(ErrorKind::Precondition, "eta, tau and mollify must be nonnegative");
  if (!(p.R > 0.0)) throw Error(ErrorKind::Precondition, "R must be positive (or infinite)");
  if (p.scheme == Scheme::Eta && !(p.eta > 0.0)) throw Error(ErrorKind::Precondition, "eta-scheme requires eta > 0");
  if (p.scheme == Scheme::R && !std::isfinite(p.R)) throw Error(ErrorKind::Precondition, "R-scheme requires finite R");
}

ProblemSpec effective_spec(const ProblemSpec& spec, const RegularizationParams& p) {
  ProblemSpec out = spec;
  if (std::isfinite(p.R)) out = truncate_flux(out, p.R);
  if (p.mollify > 0.0) out = mollify_coefficients(out, p.mollify);
  return out;
}

double stable_dt(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, double state_range) {
  const ProblemSpec eff = effective_spec(spec, p);
  double max_b = 0.0, max_a = 0.0;
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double xi = state_range * (2.0 * i / (n - 1) - 1.0);
    const Vec b = eff.b(xi);
    for (int d = 0; d < grid.dim(); ++d) max_b = std::max(max_b, std::abs(b[d]));
    if (!eff.diffusion.zero) {
      const auto ev = eff.A(xi).eigenvalues();
      max_a = std::max({max_a, std::abs(ev[0]), std::abs(ev[1])});
    }
  }
  const double h = grid.h();
  double bound = std::numeric_limits<double>::infinity();
  if (max_b > 0.0) bound = std::min(bound, h / max_b);
  if (max_a > 0.0) bound = std::min(bound, h * h / (2.0 * grid.dim() * max_a));
  return 0.4 * bound;
}

// --- implicit operator ----------------------------------------------------------

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct ImplicitOperator::Plans {
  std::vector<double> real;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

ImplicitOperator::ImplicitOperator(const TorusGrid& grid, double eta_dt, double tau_dt) : grid_(grid) {
  identity_ = eta_dt == 0.0 && tau_dt == 0.0;
  if (identity_) return;
  const int m = static_cast<int>(grid.points());
  const int half = m / 2 + 1;
  const double h = grid.h();
  const std::size_t nspec = grid.dim() == 1 ? half : static_cast<std::size_t>(m) * half;
  auto lap = [&](int k) {
    const double s = std::sin(std::numbers::pi * k / m);
    return -4.0 * s * s / (h * h);
  };
  symbol_inv_.resize(nspec);
  for (std::size_t idx = 0; idx < nspec; ++idx) {
    double lam = 0.0;
    if (grid.dim() == 1) {
      lam = lap(static_cast<int>(idx));
    } else {
      lam = lap(static_cast<int>(idx / half)) + lap(static_cast<int>(idx % half));
    }
    symbol_inv_[idx] = 1.0 / (1.0 + eta_dt * lam * lam - tau_dt * lam) / static_cast<double>(grid.size());
  }
  plans_ = std::make_unique<Plans>();
  plans_->real.resize(grid.size());
  std::lock_guard lock(fftw_planner_mutex());
  plans_->spec = fftw_alloc_complex(nspec);
  if (grid.dim() == 1) {
    plans_->forward = fftw_plan_dft_r2c_1d(m, plans_->real.data(), plans_->spec, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r_1d(m, plans_->spec, plans_->real.data(), FFTW_ESTIMATE);
  } else {
    plans_->forward = fftw_plan_dft_r2c_2d(m, m, plans_->real.data(), plans_->spec, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r_2d(m, m, plans_->spec, plans_->real.data(), FFTW_ESTIMATE);
  }
}

ImplicitOperator::~ImplicitOperator() {
  if (!plans_) return;
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
  fftw_free(plans_->spec);
}

void ImplicitOperator::solve_in_place(ScalarField& r) {
  if (identity_) return;
  if (!(r.grid() == grid_)) throw Error(ErrorKind::Shape, "implicit operator built for another grid");
  std::copy(r.values().begin(), r.values().end(), plans_->real.begin());
  fftw_execute(plans_->forward);
  for (std::size_t i = 0; i < symbol_inv_.size(); ++i) {
    plans_->spec[i][0] *= symbol_inv_[i];
    plans_->spec[i][1] *= symbol_inv_[i];
  }
  fftw_execute(plans_->backward);
  std::copy(plans_->real.begin(), plans_->real.end(), r.values().begin());
}

// --- stepping ----------------------------------------------------------------

std::vector<std::size_t> steps_for_times(const std::vector<double>& times, const RegularizationParams& p) {
  std::vector<std::size_t> out;
  const std::size_t n = p.steps();
  for (double t : times) {
    if (t < 0.0 || t > p.T * (1.0 + 1e-12)) throw Error(ErrorKind::Precondition, "output time outside [0, T]");
    const double q = t / p.dt;
    const auto k = static_cast<std::size_t>(std::llround(q));
    if (std::abs(q - static_cast<double>(k)) > 1e-6) throw Error(ErrorKind::Precondition, "output time is not a multiple of dt");
    out.push_back(std::min(k, n));
  }
  return out;
}

std::vector<std::size_t> every_n_steps(const RegularizationParams& p, std::size_t every) {
  const std::size_t n = p.steps();
  every = std::max<std::size_t>(every, 1);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= n; k += every) out.push_back(k);
  if (out.back() != n) out.push_back(n);
  return out;
}

ScalarField step(const ScalarField& u, const RegularizationParams& p, const ProblemSpec& spec, const NoisePath& path,
                 std::size_t step_index, ImplicitOperator& op) {
  ScalarField next = u;
  ScalarField flux = conservative_div_flux(u, spec);
  flux += degenerate_diffusion(u, spec);
  flux *= p.dt;
  next += flux;
  if (path.modes() > 0 && spec.noise.g) next += apply_noise(u, spec, path, step_index);
  op.solve_in_place(next);
  if (!next.all_finite()) {
    std::ostringstream os;
    os << "non-finite state after step " << step_index << " (dt may violate the stability bound)";
    throw BlowUpError(step_index, os.str());
  }
  return next;
}

ScalarField step(const ScalarField& u, const RegularizationParams& p, const ProblemSpec& spec, const NoisePath& path,
                 std::size_t step_index) {
  validate(p);
  const ProblemSpec eff = effective_spec(spec, p);
  ImplicitOperator op(u.grid(), p.eta * p.dt, p.tau * p.dt);
  return step(u, p, eff, path, step_index, op);
}

namespace {

void check_path(const NoisePath& path, const RegularizationParams& p) {
  if (path.modes() == 0) return;
  if (path.steps() < p.steps()) throw Error(ErrorKind::Precondition, "noise path shorter than the run");
  if (std::abs(path.dt() - p.dt) > 1e-12 * p.dt) throw Error(ErrorKind::Precondition, "noise path dt differs from run dt");
}

Trajectory empty_trajectory(const TorusGrid& grid, const RegularizationParams& p, const NoisePath& path) {
  Trajectory t;
  t.grid = grid;
  t.params = p;
  t.noise_seed = path.seed();
  t.noise_modes = path.modes();
  return t;
}

void record(Trajectory& t, std::size_t k, const ScalarField& u, const RegularizationParams& p) {
  t.steps.push_back(k);
  t.times.push_back(static_cast<double>(k) * p.dt);
  t.fields.push_back(u);
}

std::vector<std::size_t> normalized(std::vector<std::size_t> s) {
  s.push_back(0);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace

Trajectory solve(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, const NoisePath& path,
                 const ScalarField& u0, const std::vector<std::size_t>& output_steps) {
  validate(p);
  check_path(path, p);
  if (!(u0.grid() == grid)) throw Error(ErrorKind::Shape, "initial field not on the run grid");
  const ProblemSpec eff = effective_spec(spec, p);
  ImplicitOperator op(grid, p.eta * p.dt, p.tau * p.dt);
  const auto outs = normalized(output_steps);
  const std::size_t last = outs.back();
  Trajectory traj = empty_trajectory(grid, p, path);
  ScalarField u = u0;
  record(traj, 0, u, p);
  std::size_t next_out = 1;
  for (std::size_t k = 0; k < last; ++k) {
    try {
      u = step(u, p, eff, path, k, op);
    } catch (const BlowUpError& e) {
      throw TrajectoryBlowUp(e.step(), e.what(), std::move(traj));
    }
    if (next_out < outs.size() && outs[next_out] == k + 1) {
      record(traj, k + 1, u, p);
      ++next_out;
    }
  }
  return traj;
}

Trajectory solve(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p, const NoisePath& path,
                 const std::vector<double>& output_times) {
  const ScalarField u0 = ScalarField::sample(grid, spec.initial.value);
  return solve(spec, grid, p, path, u0, steps_for_times(output_times, p));
}

std::pair<Trajectory, Trajectory> coupled_solve(const ProblemSpec& spec, const TorusGrid& grid,
                                                const RegularizationParams& p, const NoisePath& path,
                                                const ScalarField& u0_a, const ScalarField& u0_b,
                                                const std::vector<std::size_t>& output_steps) {
  validate(p);
  check_path(path, p);
  if (!(u0_a.grid() == grid) || !(u0_b.grid() == grid)) throw Error(ErrorKind::Shape, "initial fields not on the run grid");
  const ProblemSpec eff = effective_spec(spec, p);
  ImplicitOperator op(grid, p.eta * p.dt, p.tau * p.dt);
  const auto outs = normalized(output_steps);
  Trajectory ta = empty_trajectory(grid, p, path), tb = ta;
  ScalarField a = u0_a, b = u0_b;
  record(ta, 0, a, p);
  record(tb, 0, b, p);
  std::size_t next_out = 1;
  for (std::size_t k = 0; k < outs.back(); ++k) {
    try {
      a = step(a, p, eff, path, k, op);
    } catch (const BlowUpError& e) {
      throw TrajectoryBlowUp(e.step(), e.what(), std::move(ta));
    }
    try {
      b = step(b, p, eff, path, k, op);
    } catch (const BlowUpError& e) {
      throw TrajectoryBlowUp(e.step(), e.what(), std::move(tb));
    }
    if (next_out < outs.size() && outs[next_out] == k + 1) {
      record(ta, k + 1, a, p);
      record(tb, k + 1, b, p);
      ++next_out;
    }
  }
  return {std::move(ta), std::move(tb)};
}

double l1_time_distance(const Trajectory& a, const Trajectory& b) {
  if (a.times != b.times) throw Error(ErrorKind::Shape, "trajectories have different snapshot times");
  const double vol = a.grid.cell_volume();
  std::vector<double> d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    require_same_grid(a.fields[j], b.fields[j]);
    double s = 0.0;
    for (std::size_t i = 0; i < a.fields[j].size(); ++i) s += std::abs(a.fields[j][i] - b.fields[j][i]);
    d[j] = s * vol;
  }
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < d.size(); ++j) total += 0.5 * (a.times[j + 1] - a.times[j]) * (d[j] + d[j + 1]);
  return total;
}

CascadeTable cascade_tau(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                         const NoisePath& path, const ScalarField& u0, RegularizationParams base,
                         std::size_t output_every) {
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (taus[i] > taus[i - 1]) throw Error(ErrorKind::Precondition, "tau list must be nonincreasing");
  base.scheme = Scheme::Tau;
  const auto outs = every_n_steps(base, output_every);
  std::vector<Trajectory> runs;
  for (double tau : taus) {
    RegularizationParams p = base;
    p.tau = tau;
    runs.push_back(solve(spec, grid, p, path, u0, outs));
  }
  CascadeTable table;
  table.taus = taus;
  table.distance.assign(taus.size(), std::vector<double>(taus.size(), 0.0));
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t j = i + 1; j < taus.size(); ++j)
      table.distance[i][j] = table.distance[j][i] = l1_time_distance(runs[i], runs[j]);
  return table;
}

ScalarField mollify_initial(const ScalarField& u0, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::Domain, "mollifier width must be positive");
  const TorusGrid& g = u0.grid();
  const double h = g.h();
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(eps / h));
  struct Tap {
    std::ptrdiff_t dx, dy;
    double w;
  };
  std::vector<Tap> taps;
  double mass = 0.0;
  const std::ptrdiff_t ry = g.dim() == 2 ? reach : 0;
  for (std::ptrdiff_t dy = -ry; dy <= ry; ++dy) {
    for (std::ptrdiff_t dx = -reach; dx <= reach; ++dx) {
      const double r = std::hypot(static_cast<double>(dx), static_cast<double>(dy)) * h / eps;
      if (r >= 1.0) continue;
      const double w = std::exp(-1.0 / (1.0 - r * r));
      taps.push_back({dx, dy, w});
      mass += w;
    }
  }
  for (auto& t : taps) t.w /= mass;
  ScalarField out(g);
  for (std::size_t i = 0; i < u0.size(); ++i) {
    double s = 0.0;
    for (const auto& t : taps) {
      std::size_t k = g.neighbour(i, 0, t.dx);
      if (t.dy != 0) k = g.neighbour(k, 1, t.dy);
      s += t.w * u0[k];
    }
    out[i] = s;
  }
  return out;
}

}  // namespace kinlab
