#include "kinlab/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "json.hpp"

namespace kinlab {

TorusGrid::TorusGrid(int dim, std::size_t points) : dim_(dim), m_(points) {
  if (dim != 1 && dim != 2) throw Error(ErrorKind::Unsupported, "grid dimension must be 1 or 2");
  if (points < 4) throw Error(ErrorKind::Domain, "grid needs at least 4 points per axis");
}

std::size_t TorusGrid::neighbour(std::size_t flat, int axis, std::ptrdiff_t shift) const {
  if (axis == 0) {
    const std::size_t row = flat - flat % m_;
    return row + wrap(static_cast<std::ptrdiff_t>(flat % m_) + shift);
  }
  const std::size_t col = flat % m_;
  return wrap(static_cast<std::ptrdiff_t>(flat / m_) + shift) * m_ + col;
}

Point TorusGrid::center(std::size_t flat) const {
  const double hh = h();
  if (dim_ == 1) return {(static_cast<double>(flat) + 0.5) * hh, 0.0};
  return {(static_cast<double>(flat % m_) + 0.5) * hh, (static_cast<double>(flat / m_) + 0.5) * hh};
}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values) : grid_(grid), v_(std::move(values)) {
  if (v_.size() != grid_.size()) throw Error(ErrorKind::Shape, "value count does not match the grid");
}

ScalarField ScalarField::sample(const TorusGrid& grid, const std::function<double(const Point&)>& f) {
  ScalarField u(grid);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(grid.center(i));
  return u;
}

double ScalarField::sum() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s;
}

double ScalarField::min() const { return *std::min_element(v_.begin(), v_.end()); }
double ScalarField::max() const { return *std::max_element(v_.begin(), v_.end()); }

bool ScalarField::all_finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid()) || a.size() != b.size()) throw Error(ErrorKind::Shape, "fields live on different grids");
}

double inner(const ScalarField& u, const ScalarField& v) {
  require_same_grid(u, v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double inner(const VectorField& u, const VectorField& v) {
  if (u.size() != v.size()) throw Error(ErrorKind::Shape, "vector fields have different component counts");
  double s = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a) s += inner(u[a], v[a]);
  return s;
}

VectorField grad(const ScalarField& u) {
  const TorusGrid& g = u.grid();
  const double inv = 0.5 / g.h();
  VectorField out;
  for (int axis = 0; axis < g.dim(); ++axis) {
    ScalarField c(g);
    for (std::size_t i = 0; i < u.size(); ++i) c[i] = (u[g.neighbour(i, axis, 1)] - u[g.neighbour(i, axis, -1)]) * inv;
    out.push_back(std::move(c));
  }
  return out;
}

ScalarField div(const VectorField& v) {
  if (v.empty()) throw Error(ErrorKind::Shape, "empty vector field");
  const TorusGrid& g = v[0].grid();
  if (static_cast<int>(v.size()) != g.dim()) throw Error(ErrorKind::Shape, "component count differs from grid dimension");
  for (const auto& c : v) require_same_grid(c, v[0]);
  const double inv = 0.5 / g.h();
  ScalarField out(g);
  for (int axis = 0; axis < g.dim(); ++axis)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += (v[axis][g.neighbour(i, axis, 1)] - v[axis][g.neighbour(i, axis, -1)]) * inv;
  return out;
}

ScalarField laplacian(const ScalarField& u) {
  const TorusGrid& g = u.grid();
  const double inv = 1.0 / (g.h() * g.h());
  ScalarField out(g);
  for (int axis = 0; axis < g.dim(); ++axis)
    for (std::size_t i = 0; i < u.size(); ++i)
      out[i] += (u[g.neighbour(i, axis, 1)] - 2.0 * u[i] + u[g.neighbour(i, axis, -1)]) * inv;
  return out;
}

ScalarField biharmonic(const ScalarField& u) { return laplacian(laplacian(u)); }

ScalarField forward_difference(const ScalarField& u, int axis) {
  const TorusGrid& g = u.grid();
  const double inv = 1.0 / g.h();
  ScalarField out(g);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (u[g.neighbour(i, axis, 1)] - u[i]) * inv;
  return out;
}

ScalarField rusanov_face_flux(const ScalarField& u, const ProblemSpec& spec, int axis) {
  const TorusGrid& g = u.grid();
  std::vector<double> flux(u.size()), speed(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    flux[i] = spec.B(u[i])[axis];
    speed[i] = std::abs(spec.b(u[i])[axis]);
  }
  ScalarField face(g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::size_t r = g.neighbour(i, axis, 1);
    const double lambda = std::max(speed[i], speed[r]);
    face[i] = 0.5 * (flux[i] + flux[r]) - 0.5 * lambda * (u[r] - u[i]);
  }
  return face;
}

ScalarField conservative_div_flux(const ScalarField& u, const ProblemSpec& spec) {
  const TorusGrid& g = u.grid();
  const double inv = 1.0 / g.h();
  ScalarField out(g);
  for (int axis = 0; axis < g.dim(); ++axis) {
    const ScalarField face = rusanov_face_flux(u, spec, axis);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] -= (face[i] - face[g.neighbour(i, axis, -1)]) * inv;
  }
  return out;
}

ScalarField degenerate_diffusion(const ScalarField& u, const ProblemSpec& spec) {
  const TorusGrid& g = u.grid();
  ScalarField out(g);
  if (spec.diffusion.zero) return out;
  const int dim = g.dim();
  std::vector<SmallMatrix> bar(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) bar[i] = spec.A_bar(u[i]);
  const double inv = 1.0 / (g.h() * g.h());
  for (int axis = 0; axis < dim; ++axis)
    for (std::size_t i = 0; i < u.size(); ++i)
      out[i] += (bar[g.neighbour(i, axis, 1)](axis, axis) - 2.0 * bar[i](axis, axis) +
                 bar[g.neighbour(i, axis, -1)](axis, axis)) * inv;
  if (dim == 2) {
    bool cross = false;
    for (std::size_t i = 0; i < u.size() && !cross; ++i) cross = !spec.A(u[i]).is_diagonal();
    if (cross) {
      if (!spec.diffusion.constant)
        throw Error(ErrorKind::Unsupported, "non-constant off-diagonal diffusion is not supported");
      const double q = 0.25 * inv;
      for (std::size_t i = 0; i < u.size(); ++i) {
        auto at = [&](int sx, int sy) {
          const std::size_t k = g.neighbour(g.neighbour(i, 0, sx), 1, sy);
          return bar[k](0, 1) + bar[k](1, 0);
        };
        out[i] += (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) * q;
      }
    }
  }
  return out;
}

void write_field_csv(std::ostream& os, const ScalarField& u) {
  const TorusGrid& g = u.grid();
  os << (g.dim() == 1 ? "i,value\n" : "i,j,value\n");
  os << std::setprecision(17);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (g.dim() == 1)
      os << k << ',' << u[k] << '\n';
    else
      os << k % g.points() << ',' << k / g.points() << ',' << u[k] << '\n';
  }
}

namespace {

void put_le(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  os.write(buf, 8);
}

double get_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw Error(ErrorKind::Io, "truncated float64 block");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t{buf[b]} << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_field_raw(const std::string& path, const ScalarField& u, double time) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  for (std::size_t i = 0; i < u.size(); ++i) put_le(os, u[i]);
  nlohmann::json meta{{"format", "float64-le"},
                      {"dim", u.grid().dim()},
                      {"points", u.grid().points()},
                      {"count", u.size()},
                      {"order", "first axis fastest"},
                      {"time", time}};
  std::ofstream side(path + ".json");
  if (!side) throw Error(ErrorKind::Io, "cannot open " + path + ".json");
  side << meta.dump(2) << '\n';
}

ScalarField read_field_raw(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw Error(ErrorKind::Io, "cannot open " + path + ".json");
  const auto meta = nlohmann::json::parse(side);
  const TorusGrid g(meta.at("dim").get<int>(), meta.at("points").get<std::size_t>());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  ScalarField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = get_le(is);
  return u;
}

}  // namespace kinlab
