// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kinlab/config.hpp"
#include "kinlab/diagnostics.hpp"
#include "kinlab/grid.hpp"
#include "kinlab/kinetic.hpp"
#include "kinlab/model.hpp"
#include "kinlab/noise.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/solver.hpp"

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string cli_path;
fs::path workdir;

/// Largest dt = T / n not exceeding `limit`, with n a multiple of `multiple`.
double fit_dt(double T, double limit, double multiple = 1.0) {
  return T / (multiple * std::ceil(T / limit / multiple - 1e-9));
}

double observed_order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

// 1. Heat-equation oracle ------------------------------------------------------------

double heat_error(std::size_t M) {
  ProblemSpec spec = build_spec(catalog_problem("heat"), 1, 2.0);
  const TorusGrid g(1, M);
  RegularizationParams p;
  p.T = 0.1;
  p.dt = fit_dt(p.T, 0.1 * g.h() * g.h());
  const NoisePath path = sample_path(0, p.steps(), p.dt, 0);
  const auto traj = solve(spec, g, p, path, ScalarField::sample(g, spec.initial.value), {p.steps()});
  const double decay = std::exp(-4.0 * kPi * kPi * p.T);
  double e2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = traj.fields.back()[i] - decay * std::sin(2.0 * kPi * g.center(i)[0]);
    e2 += d * d;
  }
  return std::sqrt(g.h() * e2);
}

Outcome heat_oracle() {
  const double e64 = heat_error(64), e128 = heat_error(128), e256 = heat_error(256);
  const double o1 = observed_order(e64, e128), o2 = observed_order(e128, e256);
  return {e256 <= 1e-3 && std::min(o1, o2) >= 1.9,
          fmt("L2 error at M=256 %.3e (<= 1e-3); orders %.3f, %.3f (>= 1.9)", e256, o1, o2)};
}

// 2. Rankine-Hugoniot front ----------------------------------------------------------------

Outcome rankine_hugoniot() {
  const std::size_t M = 512;
  ProblemSpec spec = build_spec(catalog_problem("burgers"), 1, 1.5);
  const TorusGrid g(1, M);
  RegularizationParams p;
  p.tau = 1e-3;
  p.T = 0.25;
  p.dt = fit_dt(p.T, stable_dt(spec, g, p, 1.5));
  const NoisePath path = sample_path(0, p.steps(), p.dt, 0);
  const auto traj = solve(spec, g, p, path, ScalarField::sample(g, spec.initial.value), {p.steps()});
  const ScalarField& u = traj.fields.back();
  // Downward crossing of 1/2 (the shock; the rarefaction crosses upward).
  double front = -1.0;
  for (std::size_t i = 0; i + 1 < M; ++i)
    if (u[i] >= 0.5 && u[i + 1] < 0.5) {
      const double x = g.center(i)[0];
      front = x + g.h() * (u[i] - 0.5) / (u[i] - u[i + 1]);
    }
  const double expected = 0.5 + 0.25 / 2.0;
  const double err = std::abs(front - expected);
  return {err <= 2.0 * g.h(), fmt("front %.5f vs %.5f: |error| %.2e (<= 2h = %.2e)", front, expected, err, 2.0 * g.h())};
}

// 3-6. Stochastic degenerate catalog problem ----------------------------------------------

struct Stochastic {
  ProblemSpec spec;
  TorusGrid grid{1, 128};
  RegularizationParams params;
};

Stochastic stochastic_setup(double T, const std::string& initial) {
  Stochastic s;
  ProblemDesc d = catalog_problem("burgers-degenerate");
  if (initial == "riemann") d.initial.type = "riemann";
  s.spec = build_spec(d, 1, 1.5);
  s.params.tau = 1e-3;
  s.params.T = T;
  s.params.dt = fit_dt(T, stable_dt(s.spec, s.grid, s.params, 1.5), 20.0);
  return s;
}

Outcome contraction() {
  auto s = stochastic_setup(0.05, "sine");
  const ScalarField a = ScalarField::sample(s.grid, initial_sine(1.0, 1, 0.0).value);
  const ScalarField b = ScalarField::sample(s.grid, initial_sine(0.5, 2, 0.25).value);
  EnsembleOptions o;
  o.members = 64;
  o.seed = 2024;
  const auto rep = contraction_report(s.spec, s.grid, s.params, a, b, {0.01, 0.025, 0.05}, o);
  std::string rows;
  for (const auto& r : rep.rows) rows += fmt(" t=%.3f: %.4f+-%.4f", r.time, r.ratio, r.ratio_se);
  return {rep.pass, fmt("c_disc %.2e (expected <= 0.05);", rep.c_disc) + rows};
}

std::vector<double> tau_decade() { return {1e-1, 1e-2, 1e-3}; }

Outcome energy() {
  auto s = stochastic_setup(0.05, "sine");
  std::vector<RegularizationParams> ps;
  for (double tau : tau_decade()) {
    auto p = s.params;
    p.tau = tau;
    ps.push_back(p);
  }
  EnsembleOptions o;
  o.members = 32;
  o.seed = 77;
  o.output_every = 10;
  const auto rep = energy_report(s.spec, s.grid, ps, 2.0, o);
  std::string rows;
  for (const auto& r : rep.rows) rows += fmt(" tau=%g: %.5f+-%.5f", r.tau, r.sup_norm.mean, r.sup_norm.se);
  return {rep.flatness <= 1.10, fmt("max/min of E sup_t ||u||_2^2 = %.4f (<= 1.10);", rep.flatness) + rows};
}

Outcome cauchy() {
  auto s = stochastic_setup(0.05, "sine");
  EnsembleOptions o;
  o.members = 32;
  o.seed = 99;
  o.output_every = 10;
  const auto rep = cauchy_report(s.spec, s.grid, tau_decade(), s.params, o);
  std::string rows;
  for (std::size_t i = 0; i + 1 < rep.taus.size(); ++i)
    rows += fmt(" d(%g,%g)=%.4e+-%.1e", rep.taus[i], rep.taus[i + 1], rep.distance[i][i + 1].mean,
                rep.distance[i][i + 1].se);
  for (const auto& d : rep.consecutive_drop) rows += fmt(" drop %.3e+-%.1e", d.mean, d.se);
  return {rep.decreasing, "diagonal pairs:" + rows};
}

Outcome regularity() {
  auto s = stochastic_setup(0.05, "riemann");
  const double vs = regularity_exponent(s.spec.hyp.gamma, s.spec.hyp.alpha);
  EnsembleOptions o;
  o.members = 16;
  o.seed = 5;
  const auto rep = regularity_report(s.spec, s.grid, tau_decade(), s.params, vs / 2.0, {0.01, 0.025, 0.05}, o);
  bool pass = rep.flatness <= 2.0;
  std::string detail = fmt("s = %.3f, flatness %.4f (<= 2);", rep.s, rep.flatness);

  // Seminorm relations over a 20-field corpus: C is fitted on ten fields and
  // must cover the ten held-out fields within a factor 2.
  const double lambda = 0.5, sv = 0.25;
  std::vector<ScalarField> corpus;
  const TorusGrid g(1, 128);
  for (int k = 0; k < 12; ++k)
    corpus.push_back(ScalarField::sample(g, initial_random_fourier(1, 100 + k, 4 + k, 1.0, 0.5 + 0.1 * k).value));
  for (int k = 0; k < 4; ++k) corpus.push_back(ScalarField::sample(g, initial_riemann(1.0, -0.5 * k, 0.2 + 0.15 * k).value));
  for (int k = 0; k < 4; ++k)
    corpus.push_back(ScalarField::sample(g, initial_bump({0.3 + 0.1 * k, 0.0}, 0.1 + 0.08 * k, 1.0).value));
  // Interleave so both halves mix the three families.
  std::vector<ScalarField> train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i) (i % 2 == 0 ? train : test).push_back(corpus[i]);
  auto ratios = [&](const ScalarField& u) {
    const auto rep_l = seminorm_rho(u, lambda, RadialKernel::Bump);
    const double ps = seminorm_p(u, sv).value;
    return std::pair{rep_l.p_rho / rep_l.p_lambda, ps * (lambda - sv) / rep_l.p_rho};
  };
  double c1 = 0.0, c2 = 0.0;
  for (const auto& u : train) {
    const auto [r1, r2] = ratios(u);
    c1 = std::max(c1, r1);
    c2 = std::max(c2, r2);
  }
  double w1 = 0.0, w2 = 0.0;
  for (const auto& u : test) {
    const auto [r1, r2] = ratios(u);
    w1 = std::max(w1, r1);
    w2 = std::max(w2, r2);
  }
  pass = pass && w1 <= 2.0 * c1 && w2 <= 2.0 * c2;
  detail += fmt(" p_rho <= C p^lambda: fitted C %.3f, held-out max %.3f;", c1, w1);
  detail += fmt(" p^s <= C/(lambda-s) p_rho: fitted C %.3f, held-out max %.3f", c2, w2);
  return {pass, detail};
}

// 7. Kinetic residual and chain rule ----------------------------------------------------------

double kinetic_defect(std::size_t M) {
  ProblemSpec spec = build_spec(catalog_problem("transport"), 1, 2.0);
  const TorusGrid g(1, M);
  RegularizationParams p;
  p.T = 0.25;
  p.dt = 0.25 / (static_cast<double>(M) / 2.0);  // dt = h / 2, halved with h
  const NoisePath path = sample_path(0, p.steps(), p.dt, 0);
  const auto traj = solve(spec, g, p, path, ScalarField::sample(g, spec.initial.value), every_n_steps(p, 1));
  const auto vg = VelocityGrid::covering(-1.2, 1.2, 241);
  const auto est = estimate_measures(traj, spec, vg);
  KineticTestFunction test;
  test.xi_center = 0.2;
  test.xi_width = 0.9;
  return kinetic_residual(traj, spec, path, test, vg, est).abs();
}

double chain_defect(std::size_t M) {
  ProblemSpec spec = build_spec(catalog_problem("burgers-degenerate"), 1, 2.0);
  const TorusGrid g(1, M);
  const ScalarField u = ScalarField::sample(g, [](const Point& x) { return 1.5 * std::sin(2.0 * kPi * x[0]) + 0.3; });
  return chain_rule_residual(u, spec, [](double xi) { return std::cos(xi) + xi * xi; });
}

Outcome kinetic() {
  const double k1 = kinetic_defect(64), k2 = kinetic_defect(128), k3 = kinetic_defect(256);
  const double c1 = chain_defect(64), c2 = chain_defect(128), c3 = chain_defect(256);
  const double ko = std::min(observed_order(k1, k2), observed_order(k2, k3));
  const double co = std::min(observed_order(c1, c2), observed_order(c2, c3));
  return {ko >= 0.5 && co >= 1.0, fmt("kinetic residual %.2e, %.2e, %.2e: order %.3f (>= 0.5); chain rule %.2e, %.2e, "
                                      "%.2e: order %.3f (>= 1)",
                                      k1, k2, k3, ko, c1, c2, c3, co)};
}

// 8. Ito formula ---------------------------------------------------------------------------

Outcome ito() {
  ProblemSpec spec = build_spec(catalog_problem("additive-heat"), 1, 2.0);
  const TorusGrid g(1, 64);
  RegularizationParams p;
  p.T = 0.1;
  p.dt = fit_dt(p.T, stable_dt(spec, g, p, 2.0));
  const ScalarField u0 = ScalarField::sample(g, spec.initial.value);
  const ItoTest test = ito_power(2);
  const std::size_t members = 64;
  std::vector<double> with(members), without(members);
  for (std::size_t m = 0; m < members; ++m) {
    const NoisePath path = sample_path(rng::member_seed(31, m), p.steps(), p.dt, spec.noise.modes);
    const auto traj = solve(spec, g, p, path, u0, every_n_steps(p, 1));
    with[m] = ito_residual(traj, spec, path, test, true).defect;
    without[m] = ito_residual(traj, spec, path, test, false).defect;
  }
  const auto a = EnsembleStat::of(with), b = EnsembleStat::of(without);
  const double za = std::abs(a.mean) / a.se, zb = std::abs(b.mean) / b.se;
  double c2 = 0.0;
  for (std::size_t k = 1; k <= spec.noise.modes; ++k) c2 += std::pow(spec.noise.g(k, {0.0, 0.0}, 0.0), 2);
  return {za <= 3.0 && zb >= 10.0,
          fmt("with correction %.3e+-%.1e (%.2f SE <= 3); without %.3e (%.1f SE >= 10, sum c_k^2 t = %.3e)", a.mean,
              a.se, za, b.mean, zb, c2 * p.T)};
}

// 9. phi_n inequalities ------------------------------------------------------------------------

Outcome phi_n() {
  rng::SplitMix gen(424242);
  std::size_t violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int n = 1 + static_cast<int>(gen.uniform() * 10.0);
    const double p = 2.0 + 6.0 * gen.uniform();
    const double xi = (gen.uniform() * 2.0 - 1.0) * 3.0 * n;
    const double f = eval_phi_n(xi, n, p), d1 = eval_phi_n_d1(xi, n, p), d2 = eval_phi_n_d2(xi, n, p);
    // Each inequality as lhs <= rhs; the slack only absorbs rounding in the
    // branches where it holds with equality.
    const double pairs[5][2] = {{std::abs(xi * d1), p * f},
                                {std::abs(d1), p * (1.0 + f)},
                                {std::abs(d1), std::abs(xi) * d2},
                                {xi * xi * d2, p * (p - 1.0) * f},
                                {d2, p * (p - 1.0) * (1.0 + f)}};
    for (const auto& q : pairs) {
      const double excess = (q[0] - q[1]) / std::max(1.0, std::abs(q[1]));
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return {violations == 0, fmt("%zu violations in 5 x 10^4 checks; worst relative excess %.2e", violations, worst)};
}

// 10. Exact identities --------------------------------------------------------------------------

Outcome identities() {
  const TorusGrid g(1, 96), g2(2, 24);
  double worst = 0.0;
  auto rel = [&](double err, double scale) { worst = std::max(worst, std::abs(err) / std::max(scale, 1e-300)); };
  rng::SplitMix gen(8);
  for (const TorusGrid& grid : {g, g2}) {
    ScalarField u(grid), w(grid);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = gen.normal(), w[i] = gen.normal();
    VectorField v;
    for (int a = 0; a < grid.dim(); ++a) {
      ScalarField c(grid);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = gen.normal();
      v.push_back(c);
    }
    // <grad u, v> = -<u, div v>
    const double lhs = inner(grad(u), v), rhs = -inner(u, div(v));
    double scale = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (int a = 0; a < grid.dim(); ++a) scale += std::abs(u[i] * v[a][i]) / grid.h();
    rel(lhs - rhs, scale);
    // Conservative stencils sum to zero.
    const ProblemSpec spec = build_spec(catalog_problem("burgers-degenerate"), grid.dim(), 2.0);
    const ScalarField fl = conservative_div_flux(u, spec);
    const ScalarField df = degenerate_diffusion(u, spec);
    double sf = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sf += std::abs(fl[i]), sd += std::abs(df[i]);
    rel(fl.sum(), sf);
    rel(df.sum(), sd);
  }
  // Kinetic field: monotone in xi and one unit jump per cell.
  bool kinetic_ok = true;
  {
    ScalarField u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 2.0 * gen.uniform() - 1.0;
    const auto vg = VelocityGrid::covering(-1.0, 1.0, 101);
    const auto f = kinetic_function(u, vg);
    kinetic_ok = f.satisfies_invariants();
    for (std::size_t i = 0; i < f.cells(); ++i) {
      int s = 0;
      for (std::size_t j = 0; j + 1 < f.velocities(); ++j) s += f(i, j + 1) - f(i, j);
      kinetic_ok = kinetic_ok && s == -1;
    }
  }
  // Mass conservation without noise over a full run.
  {
    ProblemSpec spec = build_spec(catalog_problem("burgers-degenerate"), 1, 1.5);
    spec.noise = noise_none();
    RegularizationParams p;
    p.tau = 1e-2;
    p.eta = 1e-6;
    p.T = 0.02;
    p.dt = fit_dt(p.T, stable_dt(spec, g, p, 1.5));
    const NoisePath path = sample_path(0, p.steps(), p.dt, 0);
    const ScalarField u0 = ScalarField::sample(g, initial_sine(1.0, 1, 0.3).value);
    const auto traj = solve(spec, g, p, path, u0, {p.steps()});
    double scale = 0.0;
    for (double x : u0.values()) scale += std::abs(x);
    rel(traj.fields.back().sum() - u0.sum(), scale);
  }
  return {worst <= 1e-12 && kinetic_ok,
          fmt("worst relative defect %.2e (<= 1e-12); kinetic field invariants %s", worst, kinetic_ok ? "hold" : "FAIL")};
}

// 11. Reproducibility through the CLI ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<std::string> fa, fb;
  for (const auto& e : fs::directory_iterator(a)) fa.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) fb.push_back(e.path().filename().string());
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) {
    why = "file lists differ";
    return false;
  }
  for (const auto& f : fa)
    if (slurp(a / f) != slurp(b / f)) {
      why = f + " differs";
      return false;
    }
  return true;
}

Outcome reproducibility() {
  if (cli_path.empty()) return {false, "no --cli given"};
  const std::string base =
      R"("grid":{"points":32},"state_range":1.5,"seed":11,"ensemble":{"members":8},"options":{"velocity":{"points":61}},)";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"run", R"({"problem":{"catalog":"burgers-degenerate"},)" + base + R"("time":{"dt":0.00005,"T":0.01,"output_every":20}})"},
      {"cascade", R"({"problem":{"catalog":"burgers-degenerate"},)" + base +
                      R"("params":{"tau_list":[0.1,0.01,0.001]},"time":{"dt":0.00005,"T":0.01,"output_every":10}})"},
      {"contraction", R"({"problem":{"catalog":"burgers-degenerate","initial_b":{"type":"sine","amplitude":0.5}},)" +
                          base + R"("params":{"tau":0.001},"time":{"dt":0.00005,"T":0.01,"output_times":[0.005,0.01]}})"},
      {"energy", R"({"problem":{"catalog":"burgers-degenerate"},)" + base +
                     R"("params":{"tau_list":[0.1,0.01]},"time":{"dt":0.00005,"T":0.01,"output_every":10}})"},
      {"regularity", R"({"problem":{"catalog":"burgers-degenerate","initial":{"type":"riemann"}},)" + base +
                         R"("params":{"tau_list":[0.1,0.01]},"time":{"dt":0.00005,"T":0.01,"output_times":[0.01]}})"},
      {"kinetic-check", R"({"problem":{"catalog":"burgers-degenerate"},)" + base + R"("time":{"dt":0.00005,"T":0.005}})"},
      {"ito-check", R"({"problem":{"catalog":"additive-heat"},)" + base + R"("time":{"dt":0.00005,"T":0.005}})"},
      {"audit", R"({"problem":{"catalog":"burgers-degenerate"},)" + base + R"("time":{"dt":0.00005,"T":0.001},"options":{"audit_samples":512}})"},
  };
  // The base block already carries "options"; the audit entry overrides it.
  std::string failures;
  for (const auto& [cmd, text] : runs) {
    std::string cfg_text = text;
    if (cmd == "audit") {
      const auto pos = cfg_text.find(R"("options":{"velocity":{"points":61}},)");
      cfg_text.erase(pos, std::string(R"("options":{"velocity":{"points":61}},)").size());
    }
    const fs::path dir = workdir / ("repro_" + cmd);
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << cfg_text;
    int rc[2];
    for (int r = 0; r < 2; ++r) {
      const std::string cmdline = cli_path + " " + cmd + " --config " + cfg.string() + " --out " +
                                  (dir / ("out" + std::to_string(r))).string() + " --reproducible --threads " +
                                  std::to_string(r + 1) + " > " + (dir / ("stdout" + std::to_string(r))).string() +
                                  " 2>&1";
      rc[r] = std::system(cmdline.c_str());
    }
    std::string why;
    if (rc[0] != 0 || rc[1] != 0) failures += " " + cmd + "(exit " + std::to_string(rc[0]) + ")";
    else if (!same_tree(dir / "out0", dir / "out1", why)) failures += " " + cmd + "(" + why + ")";
  }
  return {failures.empty(), failures.empty() ? "8 subcommands byte-identical across reruns (threads 1 vs 2)"
                                             : "mismatch:" + failures};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli_path = argv[++i];
    else if (a == "--workdir" && i + 1 < argc) workdir = argv[++i];
    else if (a == "--only" && i + 1 < argc) only.push_back(std::atoi(argv[++i]));
  }
  if (workdir.empty()) workdir = fs::temp_directory_path() / "kinlab_acceptance";
  fs::create_directories(workdir);

  const std::vector<Criterion> criteria{
      {1, "heat-equation oracle", 10.0, heat_oracle},
      {2, "Rankine-Hugoniot front", 10.0, rankine_hugoniot},
      {3, "L1 contraction", 300.0, contraction},
      {4, "tau-uniform energy", 300.0, energy},
      {5, "Cauchy property in tau", 300.0, cauchy},
      {6, "regularity uniformity and seminorm relations", 0.0, regularity},
      {7, "kinetic and chain-rule residual orders", 0.0, kinetic},
      {8, "Ito formula", 0.0, ito},
      {9, "phi_n inequalities", 0.0, phi_n},
      {10, "exact discrete identities", 0.0, identities},
      {11, "CLI reproducibility", 0.0, reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1fs", secs);
    if (c.limit_s > 0.0) {
      timing += fmt(" (limit %.0fs)", c.limit_s);
      pass = pass && secs < c.limit_s;
    }
    std::printf("[%s] %2d %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
