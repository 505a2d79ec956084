#include "kinlab/experiments.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "kinlab/diagnostics.hpp"
#include "kinlab/kinetic.hpp"
#include "kinlab/noise.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/solver.hpp"

namespace kinlab {

namespace fs = std::filesystem;

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> cmds{"run",        "cascade",       "contraction", "energy",
                                             "regularity", "kinetic-check", "ito-check",   "audit"};
  return cmds;
}

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name), std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path(name) + "'");
    files_.push_back(name);
    return os;
  }
  void note(const std::string& name) { files_.push_back(name); }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

EnsembleOptions ensemble(const RunConfig& c, const RunOptions& o) {
  EnsembleOptions e;
  e.members = c.members;
  e.seed = c.seed;
  e.threads = o.threads;
  e.output_every = c.output_every > 0 ? c.output_every : 1;
  return e;
}

Json stat_json(const EnsembleStat& s) { return {{"mean", s.mean}, {"se", s.se}, {"count", s.count}}; }

void write_fields(std::ostream& os, const Trajectory& t) {
  const bool two = t.grid.dim() == 2;
  os << (two ? "t,i,j,value\n" : "t,i,value\n");
  const std::size_t M = t.grid.points();
  for (std::size_t s = 0; s < t.size(); ++s)
    for (std::size_t k = 0; k < t.fields[s].size(); ++k) {
      os << num(t.times[s]) << ',' << k % M;
      if (two) os << ',' << k / M;
      os << ',' << num(t.fields[s][k]) << '\n';
    }
}

void write_norms(std::ostream& os, const Trajectory& t) {
  os << "t,mass,l1,l2,linf\n";
  for (std::size_t s = 0; s < t.size(); ++s) {
    const auto& u = t.fields[s];
    double linf = 0.0;
    for (double v : u.values()) linf = std::max(linf, std::abs(v));
    os << num(t.times[s]) << ',' << num(u.sum() * u.grid().cell_volume()) << ',' << num(lp_norm(u, 1.0)) << ','
       << num(lp_norm(u, 2.0)) << ',' << num(linf) << '\n';
  }
}

std::size_t modes_of(const ProblemSpec& spec) { return spec.noise.empty() ? 0 : spec.noise.modes; }

Json cmd_run(const RunConfig& c, Output& out) {
  const ProblemSpec spec = c.spec();
  const TorusGrid grid = c.grid();
  const RegularizationParams p = c.params;
  const NoisePath path = sample_path(rng::member_seed(c.seed, 0), p.steps(), p.dt, modes_of(spec));
  save_path(out.path("noise.bin"), path);
  out.note("noise.bin");
  const ScalarField u0 = ScalarField::sample(grid, spec.initial.value);
  const auto outs = c.output_every > 0 ? every_n_steps(p, c.output_every) : steps_for_times(c.snapshot_times(), p);
  Trajectory traj;
  try {
    traj = solve(spec, grid, p, path, u0, outs);
  } catch (const TrajectoryBlowUp& e) {
    auto f = out.open("norms.csv");
    write_norms(f, e.partial());
    throw;
  }
  {
    auto f = out.open("fields.csv");
    write_fields(f, traj);
  }
  {
    auto f = out.open("norms.csv");
    write_norms(f, traj);
  }
  const auto& last = traj.fields.back();
  return {{"steps", p.steps()},
          {"snapshots", traj.size()},
          {"noise_seed", path.seed()},
          {"final_time", traj.times.back()},
          {"final_mass", last.sum() * grid.cell_volume()},
          {"final_l2", lp_norm(last, 2.0)},
          {"final_min", last.min()},
          {"final_max", last.max()}};
}

Json cmd_cascade(const RunConfig& c, const RunOptions& o, Output& out) {
  const auto rep = cauchy_report(c.spec(), c.grid(), c.taus(), c.params, ensemble(c, o));
  {
    auto f = out.open("cascade.csv");
    f << "tau_i,tau_j,mean,se\n";
    for (std::size_t i = 0; i < rep.taus.size(); ++i)
      for (std::size_t j = 0; j < rep.taus.size(); ++j)
        f << num(rep.taus[i]) << ',' << num(rep.taus[j]) << ',' << num(rep.distance[i][j].mean) << ','
          << num(rep.distance[i][j].se) << '\n';
  }
  Json drops = Json::array();
  {
    auto f = out.open("drops.csv");
    f << "i,tau_i,mean,se\n";
    for (std::size_t i = 0; i < rep.consecutive_drop.size(); ++i) {
      f << i << ',' << num(rep.taus[i]) << ',' << num(rep.consecutive_drop[i].mean) << ','
        << num(rep.consecutive_drop[i].se) << '\n';
      drops.push_back(stat_json(rep.consecutive_drop[i]));
    }
  }
  return {{"taus", rep.taus}, {"consecutive_drop", drops}, {"decreasing", rep.decreasing}};
}

Json cmd_contraction(const RunConfig& c, const RunOptions& o, Output& out) {
  if (!c.problem.initial_b) throw ConfigError("/problem/initial_b", "contraction needs a second initial datum");
  const ProblemSpec spec = c.spec();
  const TorusGrid grid = c.grid();
  const ScalarField a = ScalarField::sample(grid, spec.initial.value);
  const ScalarField b = ScalarField::sample(grid, build_initial(*c.problem.initial_b, c.dim).value);
  const auto rep = contraction_report(spec, grid, c.params, a, b, c.snapshot_times(), ensemble(c, o));
  auto f = out.open("contraction.csv");
  f << "t,distance_mean,distance_se,ratio,ratio_se\n";
  double worst = 0.0;
  for (const auto& r : rep.rows) {
    f << num(r.time) << ',' << num(r.distance.mean) << ',' << num(r.distance.se) << ',' << num(r.ratio) << ','
      << num(r.ratio_se) << '\n';
    worst = std::max(worst, r.ratio);
  }
  return {{"initial_distance", rep.initial_distance},
          {"c_disc", rep.c_disc},
          {"max_ratio", worst},
          {"pass", rep.pass},
          {"members", c.members}};
}

Json cmd_energy(const RunConfig& c, const RunOptions& o, Output& out) {
  std::vector<RegularizationParams> ps;
  for (double tau : c.taus()) ps.push_back(c.with_tau(tau));
  const auto rep = energy_report(c.spec(), c.grid(), ps, c.options.p, ensemble(c, o));
  auto f = out.open("energy.csv");
  f << "tau,sup_mean,sup_se,dissipation_mean,dissipation_se,bound_ratio,excluded\n";
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    f << num(r.tau) << ',' << num(r.sup_norm.mean) << ',' << num(r.sup_norm.se) << ',' << num(r.dissipation.mean)
      << ',' << num(r.dissipation.se) << ',' << num(r.bound_ratio) << ',' << r.excluded << '\n';
    rows.push_back({{"tau", r.tau},
                    {"sup_norm", stat_json(r.sup_norm)},
                    {"dissipation", stat_json(r.dissipation)},
                    {"bound_ratio", r.bound_ratio},
                    {"excluded", r.excluded}});
  }
  return {{"p", rep.p}, {"initial_moment", rep.initial_moment}, {"rows", rows}, {"flatness", rep.flatness}};
}

Json cmd_regularity(const RunConfig& c, const RunOptions& o, Output& out) {
  const ProblemSpec spec = c.spec();
  const TorusGrid grid = c.grid();
  const double vs = regularity_exponent(spec.hyp.gamma, spec.hyp.alpha);
  const double s = c.options.s.value_or(vs / 2.0);
  const auto rep = regularity_report(spec, grid, c.taus(), c.params, s, c.snapshot_times(), ensemble(c, o));
  {
    auto f = out.open("regularity.csv");
    f << "tau,t,mean,se\n";
    for (std::size_t i = 0; i < rep.taus.size(); ++i)
      for (std::size_t t = 0; t < rep.times.size(); ++t)
        f << num(rep.taus[i]) << ',' << num(rep.times[t]) << ',' << num(rep.values[i][t].mean) << ','
          << num(rep.values[i][t].se) << '\n';
  }
  const ScalarField u0 = ScalarField::sample(grid, spec.initial.value);
  const auto rho = seminorm_rho(u0, c.options.lambda, kernel_from_string(c.options.kernel), c.options.eps_points);
  {
    auto f = out.open("rho.csv");
    f << "eps,value\n";
    for (std::size_t k = 0; k < rho.eps.size(); ++k) f << num(rho.eps[k]) << ',' << num(rho.values[k]) << '\n';
  }
  return {{"s", rep.s},
          {"varsigma", rep.varsigma},
          {"taus", rep.taus},
          {"sup_over_time", rep.sup_over_time},
          {"flatness", rep.flatness},
          {"initial", {{"lambda", rho.lambda}, {"p_lambda", rho.p_lambda}, {"p_rho", rho.p_rho}}}};
}

Json cmd_kinetic(const RunConfig& c, Output& out) {
  const ProblemSpec spec = c.spec();
  const TorusGrid grid = c.grid();
  const RegularizationParams p = c.params;
  const NoisePath path = sample_path(rng::member_seed(c.seed, 0), p.steps(), p.dt, modes_of(spec));
  const ScalarField u0 = ScalarField::sample(grid, spec.initial.value);
  const Trajectory traj = solve(spec, grid, p, path, u0, every_n_steps(p, 1));
  const VelocityGrid vg = c.velocity_grid();
  const auto est = estimate_measures(traj, spec, vg);
  const auto res = kinetic_residual(traj, spec, path, c.options.test, vg, est);
  const auto& test = c.options.test;
  const double chain = chain_rule_residual(traj.fields.back(), spec, [&](double xi) { return test.c(xi); });
  {
    auto f = out.open("measures.csv");
    write_measures_csv(f, est);
  }
  return {{"time_term", res.time_term},
          {"initial_term", res.initial_term},
          {"transport_term", res.transport_term},
          {"diffusion_term", res.diffusion_term},
          {"stochastic_term", res.stochastic_term},
          {"ito_term", res.ito_term},
          {"measure_term", res.measure_term},
          {"defect", res.defect},
          {"abs_defect", res.abs()},
          {"total_n1", est.total_n1},
          {"total_n2", est.total_n2},
          {"tail_mass", vanishing_xi_mass(est, c.options.measure_R)},
          {"measure_R", c.options.measure_R},
          {"chain_rule_residual", chain}};
}

Json cmd_ito(const RunConfig& c, const RunOptions& o, Output& out) {
  const ProblemSpec spec = c.spec();
  const TorusGrid grid = c.grid();
  const RegularizationParams p = c.params;
  const ItoTest test = ito_power(c.options.ito_power);
  const ScalarField u0 = ScalarField::sample(grid, spec.initial.value);
  std::vector<ItoResidual> with(c.members), without(c.members);
  parallel_for(c.members, o.threads, [&](std::size_t m) {
    const NoisePath path = sample_path(rng::member_seed(c.seed, m), p.steps(), p.dt, modes_of(spec));
    const Trajectory traj = solve(spec, grid, p, path, u0, every_n_steps(p, 1));
    with[m] = ito_residual(traj, spec, path, test, true);
    without[m] = ito_residual(traj, spec, path, test, false);
  });
  auto f = out.open("ito.csv");
  f << "member,defect,defect_without_correction,ito_term,stochastic_term\n";
  std::vector<double> d1, d0;
  for (std::size_t m = 0; m < c.members; ++m) {
    f << m << ',' << num(with[m].defect) << ',' << num(without[m].defect) << ',' << num(with[m].ito_term) << ','
      << num(with[m].stochastic_term) << '\n';
    d1.push_back(with[m].defect);
    d0.push_back(without[m].defect);
  }
  const auto s1 = EnsembleStat::of(d1), s0 = EnsembleStat::of(d0);
  auto z = [](const EnsembleStat& s) { return s.se > 0.0 ? s.mean / s.se : 0.0; };
  return {{"power", c.options.ito_power},
          {"defect", stat_json(s1)},
          {"defect_without_correction", stat_json(s0)},
          {"z", z(s1)},
          {"z_without_correction", z(s0)}};
}

Json cmd_audit(const RunConfig& c, Output& out) {
  AuditOptions ao;
  ao.xi_box = c.state_range;
  const auto rep = audit_hypotheses(c.spec(), c.options.audit_samples, c.seed, ao);
  auto f = out.open("audit.csv");
  f << "check,pass,observed,limit\n";
  Json checks = Json::array();
  for (const auto& ch : rep.checks) {
    f << ch.name << ',' << (ch.pass ? 1 : 0) << ',' << num(ch.observed) << ',' << num(ch.limit) << '\n';
    checks.push_back({{"name", ch.name},
                      {"pass", ch.pass},
                      {"observed", ch.observed},
                      {"limit", ch.limit},
                      {"witness", ch.witness},
                      {"detail", ch.detail}});
  }
  return {{"samples", rep.samples}, {"all_pass", rep.all_pass()}, {"checks", checks}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Json run_experiment(const RunConfig& cfg, const std::string& command, const RunOptions& opts) {
  bool known = false;
  for (const auto& c : experiment_commands()) known = known || c == command;
  if (!known) throw Error(ErrorKind::Precondition, "unknown command '" + command + "'");
  validate_config(cfg);
  Output out(opts.out_dir.empty() ? cfg.output_dir : opts.out_dir);

  Json results;
  if (command == "run") results = cmd_run(cfg, out);
  else if (command == "cascade") results = cmd_cascade(cfg, opts, out);
  else if (command == "contraction") results = cmd_contraction(cfg, opts, out);
  else if (command == "energy") results = cmd_energy(cfg, opts, out);
  else if (command == "regularity") results = cmd_regularity(cfg, opts, out);
  else if (command == "kinetic-check") results = cmd_kinetic(cfg, out);
  else if (command == "ito-check") results = cmd_ito(cfg, opts, out);
  else results = cmd_audit(cfg, out);

  Json report;
  report["command"] = command;
  report["version"] = kVersion;
  if (!opts.reproducible) report["timestamp"] = utc_timestamp();
  report["seed"] = cfg.seed;
  report["config_hash"] = config_hash(cfg);
  report["config"] = to_json(cfg);
  report["files"] = out.files();
  report["results"] = results;
  auto f = out.open("report.json");
  f << report.dump(2) << '\n';
  return report;
}

Json error_json(const std::exception& e) {
  Json j;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    j["error"] = "config";
    j["field"] = ce->field();
  } else if (const auto* be = dynamic_cast<const BlowUpError*>(&e)) {
    j["error"] = "blow_up";
    j["step"] = be->step();
  } else if (const auto* ke = dynamic_cast<const Error*>(&e)) {
    j["error"] = to_string(ke->kind());
  } else {
    j["error"] = "internal";
  }
  j["message"] = e.what();
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BlowUpError*>(&e)) return 3;
  if (const auto* ke = dynamic_cast<const Error*>(&e)) return ke->kind() == ErrorKind::Io ? 1 : 2;
  return 1;
}

}  // namespace kinlab
