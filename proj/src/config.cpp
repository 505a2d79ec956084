#include "kinlab/config.hpp"

#include "kinlab/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kinlab {

// --- catalog -------------------------------------------------------------------

const std::vector<std::string>& catalog_keys() {
  static const std::vector<std::string> keys{"heat", "burgers", "burgers-degenerate", "additive-heat", "transport"};
  return keys;
}

ProblemDesc catalog_problem(const std::string& key) {
  ProblemDesc d;
  d.name = key;
  if (key == "heat") {
    d.diffusion.type = "identity";
  } else if (key == "burgers") {
    d.flux.type = "burgers";
    d.initial = InitialDesc{};
    d.initial.type = "riemann";
  } else if (key == "burgers-degenerate") {
    d.flux.type = "burgers";
    d.diffusion.type = "degenerate";
    d.noise = NoiseDesc{"multiplicative", 4, 0.5, 1.0};
  } else if (key == "additive-heat") {
    d.diffusion.type = "identity";
    d.noise = NoiseDesc{"additive", 4, 0.5, 1.0};
    d.initial.amplitude = 0.2;
  } else if (key == "transport") {
    d.flux.type = "linear";
  } else {
    throw Error(ErrorKind::Domain, "unknown catalog key '" + key + "'");
  }
  return d;
}

InitialProfile build_initial(const InitialDesc& d, int dim) {
  if (d.type == "sine") return initial_sine(d.amplitude, d.mode, d.offset);
  if (d.type == "constant") {
    auto p = initial_sine(0.0, 1, d.offset);
    p.name = "constant";
    return p;
  }
  if (d.type == "riemann") return initial_riemann(d.left, d.right, d.x0);
  if (d.type == "bump") {
    Point c = d.center;
    if (dim == 1) c[1] = 0.0;
    return initial_bump(c, d.radius, d.height);
  }
  if (d.type == "random_fourier") return initial_random_fourier(dim, d.seed, d.modes, d.amplitude, d.decay);
  throw Error(ErrorKind::Domain, "unknown initial profile '" + d.type + "'");
}

ProblemSpec build_spec(const ProblemDesc& desc, int dim, double xi_box) {
  ProblemSpec s;
  s.dim = dim;
  s.name = desc.name;
  const auto& f = desc.flux;
  if (f.type == "zero") s.flux = flux_zero(dim);
  else if (f.type == "linear") s.flux = flux_linear(dim, f.velocity);
  else if (f.type == "burgers") s.flux = flux_burgers(dim, f.direction);
  else throw Error(ErrorKind::Domain, "unknown flux '" + f.type + "'");

  const auto& a = desc.diffusion;
  if (a.type == "zero") s.diffusion = diffusion_zero(dim);
  else if (a.type == "identity") s.diffusion = diffusion_identity(dim, a.scale);
  else if (a.type == "degenerate") s.diffusion = diffusion_degenerate(dim, a.a_max);
  else throw Error(ErrorKind::Domain, "unknown diffusion '" + a.type + "'");

  const auto& n = desc.noise;
  if (n.type == "none") s.noise = noise_none();
  else if (n.type == "additive") s.noise = noise_additive(n.modes, n.scale, n.decay);
  else if (n.type == "multiplicative") s.noise = noise_multiplicative(n.modes, n.scale, n.decay);
  else throw Error(ErrorKind::Domain, "unknown noise '" + n.type + "'");

  s.initial = build_initial(desc.initial, dim);
  s.hyp = catalog_hypotheses(s, xi_box);
  for (const auto& [k, v] : desc.hypotheses) {
    if (k == "flux_degree") s.hyp.flux_degree = v;
    else if (k == "flux_constant") s.hyp.flux_constant = v;
    else if (k == "sigma_max") s.hyp.sigma_max = v;
    else if (k == "gamma") s.hyp.gamma = v;
    else if (k == "holder_constant") s.hyp.holder_constant = v;
    else if (k == "growth_constant") s.hyp.growth_constant = v;
    else if (k == "alpha") s.hyp.alpha = v;
    else if (k == "modulus_constant") s.hyp.modulus_constant = v;
    else throw Error(ErrorKind::Domain, "unknown hypothesis constant '" + k + "'");
  }
  return s;
}

// --- RunConfig helpers ------------------------------------------------------------

std::vector<double> RunConfig::taus() const { return tau_list.empty() ? std::vector<double>{params.tau} : tau_list; }

RegularizationParams RunConfig::with_tau(double tau) const {
  RegularizationParams p = params;
  p.tau = tau;
  return p;
}

std::vector<double> RunConfig::snapshot_times() const {
  if (output_every > 0) {
    std::vector<double> t;
    for (std::size_t s : every_n_steps(params, output_every)) t.push_back(static_cast<double>(s) * params.dt);
    return t;
  }
  if (!output_times.empty()) return output_times;
  return {params.T};
}

VelocityGrid RunConfig::velocity_grid() const {
  if (options.velocity_range)
    return VelocityGrid(options.velocity_range->first, options.velocity_range->second, options.velocity_points);
  return VelocityGrid::covering(-state_range, state_range, options.velocity_points);
}

// --- parsing ----------------------------------------------------------------------

namespace {

/// Walks a JSON object, remembers the pointer path, and rejects unknown keys.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "/" + it.key(), "unknown field");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(at(key), "expected a finite number");
    return x;
  }
  double positive(const std::string& key, double def) {
    const double x = number(key, def);
    if (!(x > 0.0)) throw ConfigError(at(key), "must be positive");
    return x;
  }
  double nonnegative(const std::string& key, double def) {
    const double x = number(key, def);
    if (!(x >= 0.0)) throw ConfigError(at(key), "must be nonnegative");
    return x;
  }
  std::uint64_t count(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(at(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string choice(const std::string& key, const std::string& def, std::initializer_list<const char*> allowed) {
    const std::string s = string(key, def);
    for (const char* a : allowed)
      if (s == a) return s;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ConfigError(at(key), "must be one of " + list);
  }
  std::vector<double> numbers(const std::string& key) {
    if (!has(key)) return {};
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  Vec vec(const std::string& key, Vec def) {
    if (!has(key)) return def;
    const auto v = numbers(key);
    if (v.empty() || v.size() > 2) throw ConfigError(at(key), "expected one or two components");
    return Vec{v[0], v.size() > 1 ? v[1] : 0.0};
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Resets every field a serialized descriptor does not carry, so that parsing
/// the output of to_json compares equal.
InitialDesc canonical(const InitialDesc& d, int dim) {
  InitialDesc c;
  c.type = d.type;
  if (d.type == "sine") {
    c.amplitude = d.amplitude, c.mode = d.mode, c.offset = d.offset;
  } else if (d.type == "constant") {
    c.offset = d.offset;
  } else if (d.type == "riemann") {
    c.left = d.left, c.right = d.right, c.x0 = d.x0;
  } else if (d.type == "bump") {
    c.center = d.center;
    if (dim == 1) c.center[1] = InitialDesc{}.center[1];
    c.radius = d.radius, c.height = d.height;
  } else {
    c.seed = d.seed, c.modes = d.modes, c.amplitude = d.amplitude, c.decay = d.decay;
  }
  return c;
}

void canonicalize(RunConfig& c) {
  auto& p = c.problem;
  p.initial = canonical(p.initial, c.dim);
  if (p.initial_b) p.initial_b = canonical(*p.initial_b, c.dim);
  const FluxDesc f0;
  if (p.flux.type != "linear") p.flux.velocity = f0.velocity;
  if (p.flux.type != "burgers") p.flux.direction = f0.direction;
  if (c.dim == 1) p.flux.velocity[1] = p.flux.direction[1] = 0.0;
  const DiffusionDesc a0;
  if (p.diffusion.type != "identity") p.diffusion.scale = a0.scale;
  if (p.diffusion.type != "degenerate") p.diffusion.a_max = a0.a_max;
  if (p.noise.type == "none") p.noise = NoiseDesc{};
}

FluxDesc parse_flux(const Json& j, const std::string& path, FluxDesc d) {
  Reader r(j, path);
  d.type = r.choice("type", d.type, {"zero", "linear", "burgers"});
  d.velocity = r.vec("velocity", d.velocity);
  d.direction = r.vec("direction", d.direction);
  return d;
}

DiffusionDesc parse_diffusion(const Json& j, const std::string& path, DiffusionDesc d) {
  Reader r(j, path);
  d.type = r.choice("type", d.type, {"zero", "identity", "degenerate"});
  d.scale = r.nonnegative("scale", d.scale);
  d.a_max = r.positive("a_max", d.a_max);
  return d;
}

NoiseDesc parse_noise(const Json& j, const std::string& path, NoiseDesc d) {
  Reader r(j, path);
  d.type = r.choice("type", d.type, {"none", "additive", "multiplicative"});
  d.modes = r.count("modes", d.type != "none" && d.modes == 0 ? 16 : d.modes);
  d.scale = r.number("scale", d.scale);
  d.decay = r.nonnegative("decay", d.decay);
  if (d.type != "none" && d.modes == 0) throw ConfigError(path + "/modes", "noise needs at least one mode");
  if (d.type == "none") d.modes = 0;
  return d;
}

InitialDesc parse_initial(const Json& j, const std::string& path, InitialDesc d) {
  Reader r(j, path);
  d.type = r.choice("type", d.type, {"sine", "constant", "riemann", "bump", "random_fourier"});
  d.amplitude = r.number("amplitude", d.amplitude);
  d.mode = r.integer("mode", d.mode);
  d.offset = r.number(d.type == "constant" ? "value" : "offset", d.offset);
  d.left = r.number("left", d.left);
  d.right = r.number("right", d.right);
  d.x0 = r.number("x0", d.x0);
  d.center = r.vec("center", d.center);
  d.radius = r.positive("radius", d.radius);
  d.height = r.number("height", d.height);
  d.seed = r.count("seed", d.seed);
  d.modes = r.integer("modes", d.modes);
  d.decay = r.nonnegative("decay", d.decay);
  if (!(d.x0 > 0.0 && d.x0 < 1.0)) throw ConfigError(path + "/x0", "must lie in (0, 1)");
  return d;
}

ProblemDesc parse_problem(const Json& j) {
  Reader r(j, "/problem");
  ProblemDesc d;
  if (r.has("catalog")) {
    const std::string key = r.string("catalog", "");
    bool known = false;
    for (const auto& k : catalog_keys()) known = known || k == key;
    if (!known) throw ConfigError("/problem/catalog", "unknown catalog key '" + key + "'");
    d = catalog_problem(key);
  }
  d.name = r.string("name", d.name);
  if (r.has("flux")) d.flux = parse_flux(r.raw("flux"), "/problem/flux", d.flux);
  if (r.has("diffusion")) d.diffusion = parse_diffusion(r.raw("diffusion"), "/problem/diffusion", d.diffusion);
  if (r.has("noise")) d.noise = parse_noise(r.raw("noise"), "/problem/noise", d.noise);
  if (r.has("initial")) d.initial = parse_initial(r.raw("initial"), "/problem/initial", d.initial);
  if (r.has("initial_b")) d.initial_b = parse_initial(r.raw("initial_b"), "/problem/initial_b", InitialDesc{});
  if (r.has("hypotheses")) {
    static const std::set<std::string> names{"flux_degree", "flux_constant",   "sigma_max", "gamma",
                                             "holder_constant", "growth_constant", "alpha", "modulus_constant"};
    const Json& h = r.raw("hypotheses");
    if (!h.is_object()) throw ConfigError("/problem/hypotheses", "expected an object");
    for (auto it = h.begin(); it != h.end(); ++it) {
      const std::string p = "/problem/hypotheses/" + it.key();
      if (!names.count(it.key())) throw ConfigError(p, "unknown hypothesis constant");
      if (!it.value().is_number()) throw ConfigError(p, "expected a number");
      d.hypotheses[it.key()] = it.value().get<double>();
    }
  }
  return d;
}

}  // namespace

void validate_config(const RunConfig& c) {
  if (c.dim != 1 && c.dim != 2) throw ConfigError("/grid/dim", "must be 1 or 2");
  if (c.points < 4) throw ConfigError("/grid/points", "must be at least 4");
  try {
    validate(c.params);
  } catch (const Error& e) {
    throw ConfigError("/params", e.what());
  }
  for (std::size_t i = 0; i < c.tau_list.size(); ++i)
    if (!(c.tau_list[i] >= 0.0)) throw ConfigError("/params/tau_list/" + std::to_string(i), "must be nonnegative");
  if (!(c.state_range > 0.0)) throw ConfigError("/state_range", "must be positive");
  if (c.members == 0) throw ConfigError("/ensemble/members", "must be at least 1");

  for (std::size_t i = 0; i < c.output_times.size(); ++i) {
    const double t = c.output_times[i];
    const double k = t / c.params.dt;
    if (!(t >= 0.0 && t <= c.params.T * (1.0 + 1e-12)) || std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
      throw ConfigError("/time/output_times/" + std::to_string(i), "must be a multiple of dt in [0, T]");
  }

  ProblemSpec spec;
  try {
    spec = c.spec();
  } catch (const Error& e) {
    throw ConfigError("/problem", e.what());
  }
  const TorusGrid grid = c.grid();
  for (double tau : c.taus()) {
    const double bound = stable_dt(spec, grid, c.with_tau(tau), c.state_range);
    if (c.params.dt > bound * (1.0 + 1e-12)) {
      std::ostringstream os;
      os.precision(6);
      os << "dt = " << c.params.dt << " exceeds the stability bound " << bound << " (M = " << c.points
         << ", state range " << c.state_range << ")";
      throw ConfigError("/time/dt", os.str());
    }
  }

  if (c.options.s) {
    const double vs = regularity_exponent(spec.hyp.gamma, spec.hyp.alpha);
    if (!(*c.options.s > 0.0 && *c.options.s < vs)) {
      std::ostringstream os;
      os << "s must lie in (0, varsigma) with varsigma = " << vs;
      throw ConfigError("/options/s", os.str());
    }
  }
  if (!(c.options.lambda > 0.0 && c.options.lambda < 1.0)) throw ConfigError("/options/lambda", "must lie in (0, 1)");
  if (c.options.velocity_points < 3) throw ConfigError("/options/velocity/points", "must be at least 3");
  if (c.options.velocity_range) {
    const auto [lo, hi] = *c.options.velocity_range;
    if (!(lo < -c.state_range && hi > c.state_range))
      throw ConfigError("/options/velocity", "velocity grid must strictly cover [-state_range, state_range]");
  }
  if (c.options.ito_power != 1 && c.options.ito_power != 2) throw ConfigError("/options/ito_power", "must be 1 or 2");
  try {
    (void)kernel_from_string(c.options.kernel);
  } catch (const Error&) {
    throw ConfigError("/options/kernel", "must be one of bump, hat, indicator");
  }
}

RunConfig parse_config(const Json& j) {
  RunConfig c;
  {
    Reader top(j, "");
    if (top.has("problem")) c.problem = parse_problem(top.raw("problem"));
    if (top.has("grid")) {
      Reader r(top.raw("grid"), "/grid");
      c.dim = r.integer("dim", c.dim);
      c.points = r.count("points", c.points);
    }
    if (top.has("params")) {
      Reader r(top.raw("params"), "/params");
      const std::string scheme = r.choice("scheme", "tau", {"eta", "R", "tau"});
      c.params.scheme = scheme_from_string(scheme);
      c.params.eta = r.nonnegative("eta", c.params.eta);
      if (r.has("R") && r.raw("R") == "inf") {
        c.params.R = std::numeric_limits<double>::infinity();
      } else {
        c.params.R = r.positive("R", c.params.R);
      }
      c.params.tau = r.nonnegative("tau", c.params.tau);
      c.tau_list = r.numbers("tau_list");
      c.params.mollify = r.nonnegative("mollify", c.params.scheme == Scheme::Eta ? c.params.eta : 0.0);
    }
    if (top.has("time")) {
      Reader r(top.raw("time"), "/time");
      c.params.dt = r.positive("dt", c.params.dt);
      c.params.T = r.nonnegative("T", c.params.T);
      c.output_every = r.count("output_every", 0);
      c.output_times = r.numbers("output_times");
      if (c.output_every > 0 && !c.output_times.empty())
        throw ConfigError("/time/output_times", "give either output_every or output_times");
    }
    c.seed = top.count("seed", c.seed);
    if (top.has("ensemble")) {
      Reader r(top.raw("ensemble"), "/ensemble");
      c.members = r.count("members", c.members);
    }
    c.state_range = top.number("state_range", c.state_range);
    if (top.has("options")) {
      Reader r(top.raw("options"), "/options");
      auto& o = c.options;
      o.p = r.number("p", o.p);
      if (o.p != 2.0 && o.p != 4.0 && o.p != 8.0) throw ConfigError("/options/p", "must be 2, 4 or 8");
      o.lambda = r.number("lambda", o.lambda);
      if (r.has("s")) o.s = r.number("s", 0.0);
      o.measure_R = r.positive("measure_R", o.measure_R);
      if (r.has("velocity")) {
        Reader v(r.raw("velocity"), "/options/velocity");
        o.velocity_points = v.count("points", o.velocity_points);
        if (v.has("min") || v.has("max")) {
          if (!(v.has("min") && v.has("max"))) throw ConfigError("/options/velocity", "give both min and max");
          o.velocity_range = std::pair{v.number("min", 0.0), v.number("max", 0.0)};
        }
      }
      if (r.has("test_function")) {
        Reader t(r.raw("test_function"), "/options/test_function");
        auto& f = o.test;
        f.time_power = t.integer("time_power", f.time_power);
        f.kx = t.integer("kx", f.kx);
        f.ky = t.integer("ky", f.ky);
        f.offset = t.number("offset", f.offset);
        f.cos_coeff = t.number("cos", f.cos_coeff);
        f.sin_coeff = t.number("sin", f.sin_coeff);
        f.xi_center = t.number("xi_center", f.xi_center);
        f.xi_width = t.positive("xi_width", f.xi_width);
        if (f.time_power < 1) throw ConfigError("/options/test_function/time_power", "must be at least 1");
      }
      o.kernel = r.choice("kernel", o.kernel, {"bump", "hat", "indicator"});
      o.ito_power = r.integer("ito_power", o.ito_power);
      o.audit_samples = r.count("audit_samples", o.audit_samples);
      o.eps_points = r.count("eps_points", o.eps_points);
      if (o.eps_points < 2) throw ConfigError("/options/eps_points", "must be at least 2");
    }
    c.output_dir = top.string("output_dir", c.output_dir);
  }
  canonicalize(c);
  validate_config(c);
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// --- serialization ------------------------------------------------------------------

namespace {

Json vec_json(const Vec& v, int dim) { return dim == 1 ? Json::array({v[0]}) : Json::array({v[0], v[1]}); }

Json initial_json(const InitialDesc& d, int dim) {
  Json j;
  j["type"] = d.type;
  if (d.type == "sine") {
    j["amplitude"] = d.amplitude;
    j["mode"] = d.mode;
    j["offset"] = d.offset;
  } else if (d.type == "constant") {
    j["value"] = d.offset;
  } else if (d.type == "riemann") {
    j["left"] = d.left;
    j["right"] = d.right;
    j["x0"] = d.x0;
  } else if (d.type == "bump") {
    j["center"] = vec_json(d.center, dim);
    j["radius"] = d.radius;
    j["height"] = d.height;
  } else {
    j["seed"] = d.seed;
    j["modes"] = d.modes;
    j["amplitude"] = d.amplitude;
    j["decay"] = d.decay;
  }
  return j;
}

Json number_or_inf(double x) { return std::isfinite(x) ? Json(x) : Json("inf"); }

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  Json prob;
  const auto& p = c.problem;
  prob["name"] = p.name;
  {
    Json f{{"type", p.flux.type}};
    if (p.flux.type == "linear") f["velocity"] = vec_json(p.flux.velocity, c.dim);
    if (p.flux.type == "burgers") f["direction"] = vec_json(p.flux.direction, c.dim);
    prob["flux"] = f;
  }
  {
    Json a{{"type", p.diffusion.type}};
    if (p.diffusion.type == "identity") a["scale"] = p.diffusion.scale;
    if (p.diffusion.type == "degenerate") a["a_max"] = p.diffusion.a_max;
    prob["diffusion"] = a;
  }
  {
    Json n{{"type", p.noise.type}};
    if (p.noise.type != "none") {
      n["modes"] = p.noise.modes;
      n["scale"] = p.noise.scale;
      n["decay"] = p.noise.decay;
    }
    prob["noise"] = n;
  }
  prob["initial"] = initial_json(p.initial, c.dim);
  if (p.initial_b) prob["initial_b"] = initial_json(*p.initial_b, c.dim);
  if (!p.hypotheses.empty()) {
    Json h = Json::object();
    for (const auto& [k, v] : p.hypotheses) h[k] = v;
    prob["hypotheses"] = h;
  }
  j["problem"] = prob;
  j["grid"] = {{"dim", c.dim}, {"points", c.points}};
  Json params{{"scheme", to_string(c.params.scheme)},
              {"eta", c.params.eta},
              {"R", number_or_inf(c.params.R)},
              {"tau", c.params.tau},
              {"mollify", c.params.mollify}};
  if (!c.tau_list.empty()) params["tau_list"] = c.tau_list;
  j["params"] = params;
  Json time{{"dt", c.params.dt}, {"T", c.params.T}};
  if (c.output_every > 0) time["output_every"] = c.output_every;
  if (!c.output_times.empty()) time["output_times"] = c.output_times;
  j["time"] = time;
  j["seed"] = c.seed;
  j["ensemble"] = {{"members", c.members}};
  j["state_range"] = c.state_range;
  const auto& o = c.options;
  Json opt{{"p", o.p}, {"lambda", o.lambda}};
  if (o.s) opt["s"] = *o.s;
  opt["measure_R"] = o.measure_R;
  Json vel{{"points", o.velocity_points}};
  if (o.velocity_range) {
    vel["min"] = o.velocity_range->first;
    vel["max"] = o.velocity_range->second;
  }
  opt["velocity"] = vel;
  opt["test_function"] = {{"time_power", o.test.time_power}, {"kx", o.test.kx},
                          {"ky", o.test.ky},                 {"offset", o.test.offset},
                          {"cos", o.test.cos_coeff},         {"sin", o.test.sin_coeff},
                          {"xi_center", o.test.xi_center},   {"xi_width", o.test.xi_width}};
  opt["kernel"] = o.kernel;
  opt["ito_power"] = o.ito_power;
  opt["audit_samples"] = o.audit_samples;
  opt["eps_points"] = o.eps_points;
  j["options"] = opt;
  j["output_dir"] = c.output_dir;
  return j;
}

std::string config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kinlab
