#include "kinlab/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "kinlab/rng.hpp"

namespace kinlab {

EnsembleStat EnsembleStat::of(const std::vector<double>& samples) {
  EnsembleStat s;
  s.count = samples.size();
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(s.count - 1) / static_cast<double>(s.count));
  }
  return s;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  // Rethrow the lowest-index failure so the outcome does not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double lp_norm(const ScalarField& u, double p) {
  double s = 0.0;
  for (double v : u.values()) s += std::pow(std::abs(v), p);
  return std::pow(u.grid().cell_volume() * s, 1.0 / p);
}

// --- Ito formula -----------------------------------------------------------------

ItoTest ito_power(int power) {
  ItoTest t;
  if (power == 1) {
    t.phi = [](double x) { return x; };
    t.dphi = [](double) { return 1.0; };
    t.d2phi = [](double) { return 0.0; };
    t.d2_bound = 0.0;
  } else if (power == 2) {
    t.phi = [](double x) { return x * x; };
    t.dphi = [](double x) { return 2.0 * x; };
    t.d2phi = [](double) { return 2.0; };
    t.d2_bound = 2.0;
  } else {
    throw Error(ErrorKind::Domain, "ito_power supports powers 1 and 2");
  }
  return t;
}

ItoResidual ito_residual(const Trajectory& traj, const ProblemSpec& spec_in, const NoisePath& path, const ItoTest& test,
                         bool with_correction) {
  const RegularizationParams& p = traj.params;
  const std::size_t n_steps = p.steps();
  if (traj.size() != n_steps + 1)
    throw Error(ErrorKind::Precondition, "Ito residual needs a snapshot at every step");
  for (std::size_t n = 0; n < traj.size(); ++n)
    if (traj.steps[n] != n) throw Error(ErrorKind::Precondition, "Ito residual needs a snapshot at every step");
  if (path.steps() < n_steps) throw Error(ErrorKind::Precondition, "noise path shorter than the trajectory");

  const ProblemSpec spec = effective_spec(spec_in, p);
  const TorusGrid& g = traj.grid;
  const int dim = g.dim();
  const double h = g.h();
  const double vol = g.cell_volume();
  const double dt = p.dt;
  const std::size_t modes = spec.noise.empty() ? 0 : std::min(path.modes(), spec.noise.modes);

  std::vector<double> psi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) psi[i] = test.psi(g.center(i));

  ItoResidual r;
  {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      a += test.phi(traj.fields.back()[i]) * psi[i];
      b += test.phi(traj.fields.front()[i]) * psi[i];
    }
    r.lhs = vol * (a - b);
  }

  for (std::size_t n = 0; n < n_steps; ++n) {
    const ScalarField& u = traj.fields[n];
    const ScalarField& un1 = traj.fields[n + 1];
    for (std::size_t i = 0; i < u.size(); ++i)
      if (std::abs(test.d2phi(u[i])) > test.d2_bound * (1.0 + 1e-12) + 1e-300)
        throw Error(ErrorKind::Precondition, "phi'' exceeds its stated bound on the observed states");

    std::vector<SmallMatrix> bar;
    if (!spec.diffusion.zero) {
      bar.resize(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        bar[i] = spec.A_bar(u[i]);
        if (!bar[i].is_diagonal()) throw Error(ErrorKind::Unsupported, "Ito residual needs diagonal diffusion");
      }
    }

    double grad_term = 0.0, div_term = 0.0;
    for (int axis = 0; axis < dim; ++axis) {
      const ScalarField face = rusanov_face_flux(u, spec, axis);
      for (std::size_t i = 0; i < u.size(); ++i) {
        const std::size_t k = g.neighbour(i, axis, 1);
        const double du = (u[k] - u[i]) / h;
        double G = -face[i] + p.tau * (un1[k] - un1[i]) / h;
        if (!bar.empty()) G += (bar[k](axis, axis) - bar[i](axis, axis)) / h;
        const double d1i = test.dphi(u[i]), d1k = test.dphi(u[k]);
        const double d2 = u[k] != u[i] ? (d1k - d1i) / (u[k] - u[i]) : test.d2phi(u[i]);
        grad_term -= d2 * du * G * 0.5 * (psi[i] + psi[k]);
        div_term -= 0.5 * (d1i + d1k) * G * (psi[k] - psi[i]) / h;
      }
    }
    r.gradient_term += dt * vol * grad_term;
    r.divergence_term += dt * vol * div_term;

    if (p.eta > 0.0) {
      const ScalarField bi = biharmonic(un1);
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s -= test.dphi(u[i]) * psi[i] * p.eta * bi[i];
      r.source_term += dt * vol * s;
    }

    if (modes > 0) {
      double st = 0.0, it = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const Point x = g.center(i);
        double noise = 0.0, g2 = 0.0;
        for (std::size_t k = 1; k <= modes; ++k) {
          const double gk = spec.noise.g(k, x, u[i]);
          noise += gk * path.increment(k, n);
          g2 += gk * gk;
        }
        st += test.dphi(u[i]) * psi[i] * noise;
        it += test.d2phi(u[i]) * psi[i] * g2;
      }
      r.stochastic_term += vol * st;
      if (with_correction) r.ito_term += 0.5 * dt * vol * it;
    }
  }
  r.defect = r.lhs - (r.source_term + r.gradient_term + r.divergence_term + r.stochastic_term + r.ito_term);
  return r;
}

// --- ensemble helpers ----------------------------------------------------------------

namespace {

std::uint64_t member_path_seed(const EnsembleOptions& opts, std::size_t m) { return rng::member_seed(opts.seed, m); }

std::size_t path_modes(const ProblemSpec& spec) { return spec.noise.empty() ? 0 : spec.noise.modes; }

ScalarField initial_field(const ProblemSpec& spec, const TorusGrid& grid) {
  if (!spec.initial.value) throw Error(ErrorKind::Precondition, "problem has no initial profile");
  return ScalarField::sample(grid, spec.initial.value);
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return a.grid().cell_volume() * s;
}

double moment(const ScalarField& u, double p) {
  double s = 0.0;
  for (double v : u.values()) s += std::pow(std::abs(v), p);
  return u.grid().cell_volume() * s;
}

/// int |u|^(p-2) (|sigma(u) grad u|^2 + tau |grad u|^2) over the torus, using
/// forward differences so the quantity matches the scheme's dissipation.
double dissipation_density(const ScalarField& u, const ProblemSpec& spec, double tau, double p) {
  const TorusGrid& g = u.grid();
  const int dim = g.dim();
  std::vector<ScalarField> du;
  for (int a = 0; a < dim; ++a) du.push_back(forward_difference(u, a));
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = p == 2.0 ? 1.0 : std::pow(std::abs(u[i]), p - 2.0);
    double grad2 = 0.0, sig2 = 0.0;
    if (spec.diffusion.zero) {
      for (int a = 0; a < dim; ++a) grad2 += du[a][i] * du[a][i];
    } else {
      const SmallMatrix sg = spec.sigma(u[i]);
      for (int a = 0; a < dim; ++a) {
        grad2 += du[a][i] * du[a][i];
        double v = 0.0;
        for (int b = 0; b < dim; ++b) v += sg(a, b) * du[b][i];
        sig2 += v * v;
      }
    }
    s += w * (sig2 + tau * grad2);
  }
  return g.cell_volume() * s;
}

double ratio_of_extremes(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

}  // namespace

EnergyReport energy_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<RegularizationParams>& params,
                           double p, const EnsembleOptions& opts) {
  if (p != 2.0 && p != 4.0 && p != 8.0) throw Error(ErrorKind::Domain, "energy moment p must be 2, 4 or 8");
  if (params.empty()) throw Error(ErrorKind::Precondition, "energy report needs at least one parameter set");
  {
    double lo = params.front().tau, hi = lo;
    for (const auto& prm : params) {
      lo = std::min(lo, prm.tau);
      hi = std::max(hi, prm.tau);
    }
    if (!(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12)))
      throw Error(ErrorKind::Precondition, "tau list must span at least one decade");
  }
  const ScalarField u0 = initial_field(spec, grid);
  EnergyReport rep;
  rep.p = p;
  rep.initial_moment = moment(u0, p);

  for (const auto& prm : params) {
    validate(prm);
    const auto outs = every_n_steps(prm, opts.output_every);
    std::vector<std::optional<std::pair<double, double>>> results(opts.members);
    parallel_for(opts.members, opts.threads, [&](std::size_t m) {
      const NoisePath path = sample_path(member_path_seed(opts, m), prm.steps(), prm.dt, path_modes(spec));
      Trajectory traj;
      try {
        traj = solve(spec, grid, prm, path, u0, outs);
      } catch (const BlowUpError&) {
        return;
      }
      const ProblemSpec eff = effective_spec(spec, prm);
      double sup = 0.0, diss = 0.0;
      for (std::size_t j = 0; j < traj.size(); ++j) {
        sup = std::max(sup, moment(traj.fields[j], p));
        if (j > 0) {
          const double dtj = traj.times[j] - traj.times[j - 1];
          diss += 0.5 * dtj *
                  (dissipation_density(traj.fields[j - 1], eff, prm.tau, p) +
                   dissipation_density(traj.fields[j], eff, prm.tau, p));
        }
      }
      results[m] = std::pair{sup, diss};
    });
    EnergyRow row;
    row.tau = prm.tau;
    std::vector<double> sups, diss;
    for (const auto& r : results) {
      if (!r) {
        ++row.excluded;
        continue;
      }
      sups.push_back(r->first);
      diss.push_back(r->second);
    }
    row.sup_norm = EnsembleStat::of(sups);
    row.dissipation = EnsembleStat::of(diss);
    row.bound_ratio = row.sup_norm.mean / (1.0 + rep.initial_moment);
    rep.rows.push_back(row);
  }
  std::vector<double> means;
  for (const auto& r : rep.rows) means.push_back(r.sup_norm.mean);
  rep.flatness = ratio_of_extremes(means);
  return rep;
}

double deterministic_contraction_defect(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p,
                                        const ScalarField& u0_a, const ScalarField& u0_b,
                                        const std::vector<std::size_t>& steps) {
  const double d0 = l1_distance(u0_a, u0_b);
  if (d0 == 0.0) return 0.0;
  ProblemSpec quiet = spec;
  quiet.noise = noise_none();
  const NoisePath path = sample_path(0, p.steps(), p.dt, 0);
  const auto [a, b] = coupled_solve(quiet, grid, p, path, u0_a, u0_b, steps);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, l1_distance(a.fields[j], b.fields[j]) / d0 - 1.0);
  return std::max(0.0, worst);
}

ContractionReport contraction_report(const ProblemSpec& spec, const TorusGrid& grid, const RegularizationParams& p,
                                     const ScalarField& u0_a, const ScalarField& u0_b, const std::vector<double>& times,
                                     const EnsembleOptions& opts) {
  if (opts.members < 8) throw Error(ErrorKind::Precondition, "contraction needs at least 8 ensemble members");
  validate(p);
  require_same_grid(u0_a, u0_b);
  const auto steps = steps_for_times(times, p);
  ContractionReport rep;
  rep.initial_distance = l1_distance(u0_a, u0_b);
  rep.c_disc = deterministic_contraction_defect(spec, grid, p, u0_a, u0_b, steps);

  std::vector<std::vector<double>> dist(opts.members);
  parallel_for(opts.members, opts.threads, [&](std::size_t m) {
    const NoisePath path = sample_path(member_path_seed(opts, m), p.steps(), p.dt, path_modes(spec));
    const auto [a, b] = coupled_solve(spec, grid, p, path, u0_a, u0_b, steps);
    std::vector<double> d;
    // coupled_solve always records t = 0; keep only the requested steps.
    for (std::size_t j = 0; j < a.size(); ++j)
      if (std::find(steps.begin(), steps.end(), a.steps[j]) != steps.end())
        d.push_back(l1_distance(a.fields[j], b.fields[j]));
    dist[m] = std::move(d);
  });

  rep.pass = true;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::vector<double> samples;
    for (const auto& d : dist) samples.push_back(d.at(t));
    ContractionRow row;
    row.time = static_cast<double>(steps[t]) * p.dt;
    row.distance = EnsembleStat::of(samples);
    if (rep.initial_distance > 0.0) {
      row.ratio = row.distance.mean / rep.initial_distance;
      row.ratio_se = row.distance.se / rep.initial_distance;
    }
    if (row.ratio > 1.0 + 3.0 * row.ratio_se + rep.c_disc + 1e-12) rep.pass = false;
    rep.rows.push_back(row);
  }
  return rep;
}

RegularityReport regularity_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                                   RegularizationParams base, double s, const std::vector<double>& times,
                                   const EnsembleOptions& opts) {
  RegularityReport rep;
  rep.s = s;
  rep.varsigma = regularity_exponent(spec.hyp.gamma, spec.hyp.alpha);
  if (!(s > 0.0 && s < rep.varsigma))
    throw Error(ErrorKind::Precondition, "regularity order s must lie in (0, varsigma)");
  rep.taus = taus;
  rep.times = times;
  base.scheme = Scheme::Tau;
  const ScalarField u0 = initial_field(spec, grid);
  const auto steps = steps_for_times(times, base);

  for (double tau : taus) {
    RegularizationParams prm = base;
    prm.tau = tau;
    validate(prm);
    std::vector<std::vector<double>> vals(opts.members);
    parallel_for(opts.members, opts.threads, [&](std::size_t m) {
      const NoisePath path = sample_path(member_path_seed(opts, m), prm.steps(), prm.dt, path_modes(spec));
      const Trajectory traj = solve(spec, grid, prm, path, u0, steps);
      std::vector<double> v;
      for (std::size_t j = 0; j < traj.size(); ++j)
        if (std::find(steps.begin(), steps.end(), traj.steps[j]) != steps.end())
          v.push_back(seminorm_p(traj.fields[j], s).value);
      vals[m] = std::move(v);
    });
    std::vector<EnsembleStat> row;
    double sup = 0.0;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      std::vector<double> samples;
      for (const auto& v : vals) samples.push_back(v.at(t));
      row.push_back(EnsembleStat::of(samples));
      sup = std::max(sup, row.back().mean);
    }
    rep.values.push_back(row);
    rep.sup_over_time.push_back(sup);
  }
  rep.flatness = ratio_of_extremes(rep.sup_over_time);
  return rep;
}

CauchyReport cauchy_report(const ProblemSpec& spec, const TorusGrid& grid, const std::vector<double>& taus,
                           RegularizationParams base, const EnsembleOptions& opts) {
  if (taus.size() < 2) throw Error(ErrorKind::Precondition, "Cauchy report needs at least two tau values");
  base.scheme = Scheme::Tau;
  const ScalarField u0 = initial_field(spec, grid);
  const std::size_t nt = taus.size();
  std::vector<std::vector<std::vector<double>>> tables(opts.members);
  parallel_for(opts.members, opts.threads, [&](std::size_t m) {
    const NoisePath path = sample_path(member_path_seed(opts, m), base.steps(), base.dt, path_modes(spec));
    tables[m] = cascade_tau(spec, grid, taus, path, u0, base, opts.output_every).distance;
  });

  CauchyReport rep;
  rep.taus = taus;
  rep.distance.assign(nt, std::vector<EnsembleStat>(nt));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nt; ++j) {
      std::vector<double> s;
      for (const auto& t : tables) s.push_back(t[i][j]);
      rep.distance[i][j] = EnsembleStat::of(s);
    }
  rep.decreasing = nt >= 3;
  for (std::size_t i = 0; i + 2 < nt; ++i) {
    std::vector<double> drops;
    for (const auto& t : tables) drops.push_back(t[i][i + 1] - t[i + 1][i + 2]);
    const auto d = EnsembleStat::of(drops);
    rep.consecutive_drop.push_back(d);
    if (!(d.mean > 0.0) || !(d.mean + 3.0 * d.se > 0.0)) rep.decreasing = false;
  }
  return rep;
}

}  // namespace kinlab
