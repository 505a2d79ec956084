#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kinlab/model.hpp"

namespace kinlab {

/// Periodic lattice on [0,1)^N with M points per axis; cell i has center
/// (i + 1/2) h.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, std::size_t points);

  int dim() const { return dim_; }
  std::size_t points() const { return m_; }
  std::size_t size() const { return dim_ == 1 ? m_ : m_ * m_; }
  double h() const { return 1.0 / static_cast<double>(m_); }
  /// Cell volume h^N.
  double cell_volume() const { return dim_ == 1 ? h() : h() * h(); }

  std::size_t wrap(std::ptrdiff_t i) const {
    const auto m = static_cast<std::ptrdiff_t>(m_);
    return static_cast<std::size_t>(((i % m) + m) % m);
  }
  std::size_t index(std::size_t i, std::size_t j = 0) const { return j * m_ + i; }
  /// Flat index of the neighbour `shift` cells away along `axis`.
  std::size_t neighbour(std::size_t flat, int axis, std::ptrdiff_t shift) const;
  Point center(std::size_t flat) const;

  bool operator==(const TorusGrid& o) const { return dim_ == o.dim_ && m_ == o.m_; }

 private:
  int dim_ = 1;
  std::size_t m_ = 4;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const TorusGrid& grid, double fill = 0.0) : grid_(grid), v_(grid.size(), fill) {}
  ScalarField(const TorusGrid& grid, std::vector<double> values);
  static ScalarField sample(const TorusGrid& grid, const std::function<double(const Point&)>& f);

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const { return v_; }
  std::span<double> values() { return v_; }

  double sum() const;
  double min() const;
  double max() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  bool operator==(const ScalarField& o) const { return grid_ == o.grid_ && v_ == o.v_; }

 private:
  TorusGrid grid_;
  std::vector<double> v_;
};

/// One ScalarField per axis.
using VectorField = std::vector<ScalarField>;

/// Cell-sum inner product sum_i u_i v_i (no h^N factor).
double inner(const ScalarField& u, const ScalarField& v);
double inner(const VectorField& u, const VectorField& v);

void require_same_grid(const ScalarField& a, const ScalarField& b);

/// Centered differences (u_{i+1} - u_{i-1}) / 2h per axis.
VectorField grad(const ScalarField& u);
/// Centered divergence; exactly the negative adjoint of grad.
ScalarField div(const VectorField& v);
/// Standard (2N+1)-point Laplacian.
ScalarField laplacian(const ScalarField& u);
ScalarField biharmonic(const ScalarField& u);
/// Forward difference (u_{i+1} - u_i) / h along `axis`, stored at face i+1/2.
ScalarField forward_difference(const ScalarField& u, int axis);

/// Rusanov (local Lax-Friedrichs) face flux F_{i+1/2} along `axis`.
ScalarField rusanov_face_flux(const ScalarField& u, const ProblemSpec& spec, int axis);
/// -div B(u) by Rusanov flux differencing; the cell sum is exactly zero.
ScalarField conservative_div_flux(const ScalarField& u, const ProblemSpec& spec);
/// div(A(u) grad u) in Kirchhoff form sum_ij d_i d_j Abar_ij(u). Diagonal
/// entries use the compact second difference; a constant off-diagonal entry
/// uses the centered cross stencil. Non-constant off-diagonal entries throw
/// Error(Unsupported).
ScalarField degenerate_diffusion(const ScalarField& u, const ProblemSpec& spec);

// --- export ------------------------------------------------------------------

/// CSV rows "i,value" (N=1) or "i,j,value" (N=2), 17 significant digits.
void write_field_csv(std::ostream& os, const ScalarField& u);
/// Raw little-endian float64 block at `path` plus `path.json` sidecar.
void write_field_raw(const std::string& path, const ScalarField& u, double time);
ScalarField read_field_raw(const std::string& path);

}  // namespace kinlab
