#include "kinlab/noise.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kinlab/rng.hpp"

namespace kinlab {

NoisePath::NoisePath(std::uint64_t seed, std::size_t steps, double dt, std::size_t modes,
                     std::vector<double> increments)
    : seed_(seed), steps_(steps), dt_(dt), modes_(modes), inc_(std::move(increments)) {
  if (inc_.size() != steps_ * modes_) throw Error(ErrorKind::Shape, "increment table size mismatch");
}

double brownian_increment(std::uint64_t seed, std::size_t k, std::size_t step, double dt) {
  return std::sqrt(dt) * rng::normal_at(seed, k, step);
}

NoisePath sample_path(std::uint64_t seed, std::size_t steps, double dt, std::size_t modes) {
  if (steps < 1) throw Error(ErrorKind::Precondition, "noise path needs at least one step");
  if (!(dt > 0.0)) throw Error(ErrorKind::Precondition, "noise path needs dt > 0");
  std::vector<double> inc(steps * modes);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 1; k <= modes; ++k)
    for (std::size_t j = 0; j < steps; ++j) inc[(k - 1) * steps + j] = sd * rng::normal_at(seed, k, j);
  return NoisePath(seed, steps, dt, modes, std::move(inc));
}

ScalarField apply_noise(const ScalarField& u, const ProblemSpec& spec, const NoisePath& path, std::size_t step) {
  if (step >= path.steps()) throw Error(ErrorKind::Precondition, "noise step index out of range");
  ScalarField out(u.grid());
  if (path.modes() == 0 || !spec.noise.g) return out;
  const TorusGrid& g = u.grid();
  for (std::size_t k = 1; k <= path.modes(); ++k) {
    const double db = path.increment(k, step);
    if (db == 0.0) continue;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double gk = spec.noise.g(k, g.center(i), u[i]);
      if (!std::isfinite(gk)) {
        std::ostringstream os;
        os << "g_" << k << " is not finite at xi=" << u[i];
        throw Error(ErrorKind::Evaluation, os.str());
      }
      out[i] += gk * db;
    }
  }
  return out;
}

double u0_norm(const NoisePath& path, std::size_t step) {
  if (step > path.steps()) throw Error(ErrorKind::Precondition, "noise step index out of range");
  double total = 0.0;
  for (std::size_t k = 1; k <= path.modes(); ++k) {
    double beta = 0.0;
    for (std::size_t j = 0; j < step; ++j) beta += path.increment(k, j);
    const double kk = static_cast<double>(k);
    total += beta * beta / (kk * kk);
  }
  return total;
}

namespace {

constexpr char kMagic[8] = {'K', 'L', 'N', 'O', 'I', 'S', 'E', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw Error(ErrorKind::Io, "truncated noise file");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= std::uint64_t{buf[b]} << (8 * b);
  return v;
}

}  // namespace

void save_path(const std::string& file, const NoisePath& path) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + file);
  os.write(kMagic, 8);
  put_u64(os, path.seed());
  put_u64(os, path.steps());
  put_u64(os, std::bit_cast<std::uint64_t>(path.dt()));
  put_u64(os, path.modes());
  for (double v : path.table()) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

NoisePath load_path(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + file);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorKind::Io, file + " is not a noise table");
  const std::uint64_t seed = get_u64(is);
  const std::uint64_t steps = get_u64(is);
  const double dt = std::bit_cast<double>(get_u64(is));
  const std::uint64_t modes = get_u64(is);
  std::vector<double> inc(steps * modes);
  for (double& v : inc) v = std::bit_cast<double>(get_u64(is));
  return NoisePath(seed, steps, dt, modes, std::move(inc));
}

}  // namespace kinlab
