#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kinlab/grid.hpp"

using namespace kinlab;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField random_field(const TorusGrid& g, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  ScalarField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = n(gen);
  return u;
}

ProblemSpec spec_with(FluxCoeff f, DiffusionCoeff d, int dim) {
  ProblemSpec s;
  s.dim = dim;
  s.flux = std::move(f);
  s.diffusion = std::move(d);
  s.noise = noise_none();
  return s;
}

double max_abs(const ScalarField& u) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i]));
  return m;
}

}  // namespace

TEST_CASE("grid basics and wrapping") {
  const TorusGrid g(2, 8);
  CHECK(g.size() == 64);
  CHECK(g.h() == 0.125);
  CHECK(g.cell_volume() == 0.125 * 0.125);
  CHECK(g.wrap(-1) == 7);
  CHECK(g.wrap(8) == 0);
  CHECK(g.wrap(-17) == 7);
  CHECK(g.neighbour(g.index(0, 3), 0, -1) == g.index(7, 3));
  CHECK(g.neighbour(g.index(2, 7), 1, 1) == g.index(2, 0));
  CHECK(g.center(g.index(1, 2))[0] == doctest::Approx(1.5 / 8));
  CHECK(g.center(g.index(1, 2))[1] == doctest::Approx(2.5 / 8));
  CHECK_THROWS_AS(TorusGrid(1, 3), Error);
  CHECK_THROWS_AS(TorusGrid(3, 8), Error);
}

TEST_CASE("grad of a constant is zero") {
  const TorusGrid g(2, 8);
  const auto v = grad(ScalarField(g, 3.5));
  REQUIRE(v.size() == 2);
  CHECK(max_abs(v[0]) == 0.0);
  CHECK(max_abs(v[1]) == 0.0);
}

TEST_CASE("grad of sin(2 pi x) meets the Taylor remainder bound") {
  const TorusGrid g(1, 256);
  const auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(2 * kPi * x[0]); });
  const auto d = grad(u)[0];
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(d[i] - 2 * kPi * std::cos(2 * kPi * g.center(i)[0])));
  const double h = g.h();
  CHECK(err <= std::pow(2 * kPi, 3) * h * h / 6.0);
}

TEST_CASE("grad of an index sawtooth: exact interior slope, periodic wrap") {
  const TorusGrid g(1, 10);
  ScalarField u(g);
  for (std::size_t i = 0; i < 10; ++i) u[i] = double(i);
  const auto d = grad(u)[0];
  const double h = g.h();
  for (std::size_t i = 1; i < 9; ++i) CHECK(d[i] == doctest::Approx(1.0 / h));
  CHECK(d[0] == doctest::Approx((1.0 - 9.0) / (2 * h)));
  CHECK(d[9] == doctest::Approx((0.0 - 8.0) / (2 * h)));
}

TEST_CASE("div is the negative adjoint of grad") {
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, dim == 1 ? 37 : 12);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto u = random_field(g, s);
      VectorField v;
      for (int a = 0; a < dim; ++a) v.push_back(random_field(g, 100 + s * 7 + a));
      const double lhs = inner(grad(u), v), rhs = inner(u, div(v));
      CHECK(std::abs(lhs + rhs) <= 1e-12 * (std::abs(lhs) + 1.0));
    }
  }
}

TEST_CASE("laplacian stencil and biharmonic") {
  const TorusGrid g2(2, 8);
  CHECK(max_abs(laplacian(ScalarField(g2, -2.0))) == 0.0);

  const TorusGrid g(1, 256);
  const auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(2 * kPi * x[0]); });
  const auto b = biharmonic(u);
  // Discrete symbol of the 3-point Laplacian squared, computed directly.
  const double h = g.h();
  const double lam = 4.0 / (h * h) * std::pow(std::sin(kPi * h), 2);
  const double exact = std::pow(2 * kPi, 4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = std::sin(2 * kPi * g.center(i)[0]);
    CHECK(b[i] == doctest::Approx(lam * lam * s).epsilon(1e-8).scale(exact));
    CHECK(std::abs(b[i] - exact * s) <= 1e-2 * exact);
  }
  const auto l = laplacian(laplacian(u));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(l[i] == b[i]);
}

TEST_CASE("laplacian commutes with translations") {
  const TorusGrid g(2, 10);
  const auto u = random_field(g, 4);
  ScalarField shifted(g);
  for (std::size_t j = 0; j < 10; ++j)
    for (std::size_t i = 0; i < 10; ++i) shifted[g.index(g.wrap(i + 3), g.wrap(j + 7))] = u[g.index(i, j)];
  const auto lu = laplacian(u), ls = laplacian(shifted);
  for (std::size_t j = 0; j < 10; ++j)
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(ls[g.index(g.wrap(i + 3), g.wrap(j + 7))] == doctest::Approx(lu[g.index(i, j)]).epsilon(1e-13));
}

TEST_CASE("mismatched grids raise a shape error") {
  const ScalarField a(TorusGrid(1, 8)), b(TorusGrid(1, 16));
  try {
    require_same_grid(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
  VectorField v{ScalarField(TorusGrid(2, 8)), ScalarField(TorusGrid(2, 6))};
  CHECK_THROWS_AS(div(v), Error);
}

TEST_CASE("conservative flux: constants, telescoping, and first-order convergence") {
  const auto burgers = spec_with(flux_burgers(2, {1.0, 0.5}), diffusion_zero(2), 2);
  const TorusGrid g2(2, 16);
  CHECK(max_abs(conservative_div_flux(ScalarField(g2, 1.3), burgers)) == 0.0);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto r = conservative_div_flux(random_field(g2, s), burgers);
    CHECK(std::abs(r.sum()) < 1e-11);
  }

  const auto linear = spec_with(flux_linear(1, {1.0, 0.0}), diffusion_zero(1), 1);
  std::vector<double> errs;
  for (std::size_t m : {64, 128, 256, 512}) {
    const TorusGrid g(1, m);
    const auto u = ScalarField::sample(g, [](const Point& x) { return std::sin(2 * kPi * x[0]); });
    const auto r = conservative_div_flux(u, linear);
    double e = 0.0;
    for (std::size_t i = 0; i < m; ++i) e = std::max(e, std::abs(r[i] + 2 * kPi * std::cos(2 * kPi * g.center(i)[0])));
    errs.push_back(e);
  }
  for (std::size_t k = 1; k < errs.size(); ++k) CHECK(std::log2(errs[k - 1] / errs[k]) >= 0.95);
}

TEST_CASE("rusanov face flux matches the formula") {
  const auto burgers = spec_with(flux_burgers(1, {1.0, 0.0}), diffusion_zero(1), 1);
  const TorusGrid g(1, 4);
  const ScalarField u(g, {1.0, -2.0, 0.5, 0.0});
  const auto F = rusanov_face_flux(u, burgers, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double a = u[i], b = u[(i + 1) % 4];
    const double lam = std::max(std::abs(a), std::abs(b));
    CHECK(F[i] == doctest::Approx(0.25 * (a * a + b * b) - 0.5 * lam * (b - a)));
  }
}

TEST_CASE("degenerate diffusion: identity, constants, and an independent oracle") {
  const TorusGrid g2(2, 12);
  const auto heat = spec_with(flux_zero(2), diffusion_identity(2, 1.0), 2);
  const auto u = random_field(g2, 9);
  const auto d = degenerate_diffusion(u, heat);
  const auto l = laplacian(u);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(d[i] == doctest::Approx(l[i]).epsilon(1e-13));

  const auto degen = spec_with(flux_zero(2), diffusion_degenerate(2, 0.5), 2);
  CHECK(max_abs(degenerate_diffusion(ScalarField(g2, 0.9), degen)) == 0.0);

  // Second implementation: closed form of Abar for min(z^2, a) and an
  // explicit 5-point stencil.
  const double a = 0.5, ra = std::sqrt(a);
  auto abar = [&](double z) {
    const double az = std::abs(z);
    const double v = az <= ra ? az * az * az / 3.0 : ra * ra * ra / 3.0 + a * (az - ra);
    return z < 0 ? -v : v;
  };
  const auto bump = ScalarField::sample(g2, [](const Point& x) {
    const double r2 = ((x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.4) * (x[1] - 0.4)) / 0.16;
    return r2 < 1 ? 1.5 * std::pow(1 - r2, 4) : 0.0;
  });
  const auto out = degenerate_diffusion(bump, degen);
  const double h2 = g2.h() * g2.h();
  double total = 0.0;
  for (std::size_t j = 0; j < 12; ++j)
    for (std::size_t i = 0; i < 12; ++i) {
      auto A = [&](std::ptrdiff_t di, std::ptrdiff_t dj) { return abar(bump[g2.index(g2.wrap(i + di), g2.wrap(j + dj))]); };
      const double oracle = (A(1, 0) + A(-1, 0) + A(0, 1) + A(0, -1) - 4 * A(0, 0)) / h2;
      CHECK(out[g2.index(i, j)] == doctest::Approx(oracle).epsilon(1e-10).scale(1.0));
      total += out[g2.index(i, j)];
    }
  CHECK(std::abs(total) < 1e-10);
}

TEST_CASE("non-constant off-diagonal diffusion is unsupported") {
  DiffusionCoeff d;
  d.matrix = [](double xi) {
    SmallMatrix m = SmallMatrix::diag(2, 1.0 + xi * xi);
    m(0, 1) = m(1, 0) = 0.1 * xi;
    return m;
  };
  const auto spec = spec_with(flux_zero(2), d, 2);
  try {
    degenerate_diffusion(random_field(TorusGrid(2, 6), 1), spec);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}

TEST_CASE("field export") {
  const TorusGrid g(2, 4);
  ScalarField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.1 * double(i) - 0.3;
  std::ostringstream os;
  write_field_csv(os, u);
  std::istringstream is(os.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
  CHECK(rows == 16);

  write_field_raw("field_raw_test.bin", u, 0.25);
  const auto back = read_field_raw("field_raw_test.bin");
  CHECK(back == u);
  std::remove("field_raw_test.bin");
  std::remove("field_raw_test.bin.json");
}
