#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "panvein/numerics.hpp"

using namespace panvein;

namespace {

// Composite Simpson on [0, h] for a matrix-valued integrand.
template <typename F>
Mat2 simpson(F f, double h, int panels = 2000) {
  Mat2 acc = f(0.0) + f(h);
  const double dx = h / panels;
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * dx);
  return acc * dx / 3.0;
}

double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("mat_exp closed forms") {
  Mat2 d = Mat2::Zero();
  d(0, 0) = -2.0;
  d(1, 1) = 0.5;
  const Mat2 ed = mat_exp<2>(d, 3.0);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(-6.0)).epsilon(1e-14));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(1.5)).epsilon(1e-14));
  CHECK(ed(0, 1) == 0.0);

  Mat2 n = Mat2::Zero();
  n(0, 1) = 1.0;
  const Mat2 en = mat_exp<2>(n, 7.0);
  CHECK(en(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(en(0, 1) == doctest::Approx(7.0).epsilon(1e-15));

  Mat2 rot;
  rot << 0.0, -1.0, 1.0, 0.0;
  const Mat2 er = mat_exp<2>(rot, std::numbers::pi / 2);
  CHECK(er(0, 0) == doctest::Approx(0.0).epsilon(1e-14).scale(1.0));
  CHECK(er(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mat_exp rejects non-finite input") {
  Mat2 m = Mat2::Zero();
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(mat_exp<2>(m, 1.0), Error);
}

TEST_CASE("mat_exp group property over random matrices") {
  gen::Source src(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Mat2 a = gen::matrix(src, 3.0);
    const double s = src.uniform(0.0, 2.0), t = src.uniform(0.0, 2.0);
    const Mat2 lhs = mat_exp<2>(a, s + t);
    const Mat2 rhs = mat_exp<2>(a, s) * mat_exp<2>(a, t);
    CHECK(max_abs(lhs - rhs) <= 1e-11 * std::max(1.0, max_abs(lhs)));
    const Mat2 id = mat_exp<2>(a, t) * mat_exp<2>(a, -t);
    CHECK(max_abs(id - Mat2::Identity()) <= 1e-10 * std::max(1.0, max_abs(mat_exp<2>(a, t)) * max_abs(mat_exp<2>(a, -t))));
  }
}

TEST_CASE("norm2 bounds") {
  Mat2 d = Mat2::Zero();
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  CHECK(norm2(d) == doctest::Approx(4.0));
  gen::Source src(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat2 m = gen::matrix(src, 5.0);
    const double n = norm2(m);
    CHECK(n >= max_abs(m) * (1 - 1e-14));
    CHECK(n <= m.norm() * (1 + 1e-14));
  }
}

TEST_CASE("rk4 integrates exponential growth to fourth order") {
  auto f = [](double, const Vec2& u) -> Vec2 { return u; };
  auto run = [&](int steps) {
    Vec2 u(1.0, 2.0);
    const double h = 1.0 / steps;
    for (int i = 0; i < steps; ++i) u = rk4_step<Vec2>(f, i * h, u, h);
    return std::abs(u[0] - std::numbers::e);
  };
  const double e1 = run(20), e2 = run(40);
  CHECK(e2 < 1e-7);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.05));
  CHECK_THROWS_AS(rk4_step<Vec2>(f, 0.0, Vec2(1.0, 1.0), 0.0), Error);
}

TEST_CASE("trapezoid rules") {
  std::vector<double> v(101);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 3.0 + 2.0 * i * 0.01;
  CHECK(quad_trapz(v, 0.01) == doctest::Approx(4.0).epsilon(1e-14));
  const auto cum = cumulative_trapz(v, 0.01);
  CHECK(cum.front() == 0.0);
  CHECK(cum.back() == doctest::Approx(quad_trapz(v, 0.01)).epsilon(1e-14));
  CHECK(cum[50] == doctest::Approx(3.0 * 0.5 + 0.25).epsilon(1e-14));
}

TEST_CASE("bracketed root finding") {
  const double r = find_root_bracketed([](double x) { return std::cos(x); }, 0.0, 2.0, {1e-14, 100});
  CHECK(r == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  try {
    find_root_bracketed([](double x) { return x * x + 1.0; }, -1.0, 1.0);
    FAIL("expected a bracket error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Bracket);
  }
}

TEST_CASE("newton_nd on a circle-line intersection") {
  auto residual = [](const VecX& x) {
    VecX r(2);
    r << x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1];
    return r;
  };
  VecX x0(2);
  x0 << 3.0, 0.5;
  const auto res = newton_nd(residual, x0);
  CHECK(res.x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(res.x[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(res.residual < 1e-10);
}

TEST_CASE("newton_nd reports non-convergence") {
  auto residual = [](const VecX& x) {
    VecX r(1);
    r << x[0] * x[0] + 1.0;
    return r;
  };
  VecX x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(newton_nd(residual, x0, {1e-12, 30, 10}), NonConvergenceError);
}

TEST_CASE("scalar exponential cell weights") {
  const auto zero = exp_cell_weights(0.0, 0.3);
  CHECK(zero.w0 == doctest::Approx(0.3));
  CHECK(zero.w1 == doctest::Approx(0.15));
  gen::Source src(13);
  for (int trial = 0; trial < 100; ++trial) {
    const double h = src.uniform(0.001, 0.5);
    const double k = src.uniform(-5.0, 80.0) / h;
    const auto w = exp_cell_weights(k, h);
    double s0 = 0.0, s1 = 0.0;
    const int panels = 4000;
    const double dx = h / panels;
    for (int i = 0; i <= panels; ++i) {
      const double s = i * dx;
      const double wt = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s0 += wt * std::exp(-k * s);
      s1 += wt * std::exp(-k * s) * s / h;
    }
    s0 *= dx / 3.0;
    s1 *= dx / 3.0;
    CHECK(w.w0 == doctest::Approx(s0).epsilon(1e-6));
    CHECK(w.w1 == doctest::Approx(s1).epsilon(1e-6));
  }
}

TEST_CASE("matrix cell weights against quadrature") {
  gen::Source src(14);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat2 a = gen::matrix(src, 2.0);
    const double h = src.uniform(0.01, 1.0);
    const auto w = mat_cell_weights(a, h);
    CHECK(max_abs(w.step - mat_exp<2>(a, h)) < 1e-12 * std::max(1.0, max_abs(w.step)));
    const Mat2 q0 = simpson([&](double s) { return Mat2(mat_exp<2>(a, s)); }, h);
    const Mat2 q1 = simpson([&](double s) { return Mat2(mat_exp<2>(a, s) * (s / h)); }, h);
    CHECK(max_abs(w.w0 - q0) < 1e-9);
    CHECK(max_abs(w.w1 - q1) < 1e-9);
  }
}

TEST_CASE("matrix convolution of a constant forcing") {
  Mat2 a;
  a << -0.3, 0.1, 0.2, -0.5;
  const Vec2 g(1.5, -0.7);
  const int n = 201;
  const double h = 0.05;
  std::vector<Vec2> gs(n, g);
  const auto out = mat_convolve_forward(a, gs, h);
  for (int j = 0; j < n; j += 20) {
    const Vec2 exact = a.inverse() * (mat_exp<2>(a, j * h) - Mat2::Identity()) * g;
    CHECK((out[static_cast<std::size_t>(j)] - exact).norm() < 1e-12);
  }
}

TEST_CASE("scalar convolutions of a constant forcing") {
  const int n = 301;
  const double h = 0.02, L = h * (n - 1);
  std::vector<double> ones(n, 1.0);
  const double mu = -0.8;
  const auto fwd = exp_convolve_forward(mu, ones, h);
  const double kappa = 250.0;
  const auto bwd = exp_convolve_backward(kappa, ones, h);
  for (int j = 0; j < n; j += 30) {
    const double x = j * h;
    CHECK(fwd[static_cast<std::size_t>(j)] == doctest::Approx(std::expm1(mu * x) / mu).epsilon(1e-12));
    CHECK(bwd[static_cast<std::size_t>(j)] ==
          doctest::Approx(-std::expm1(-kappa * (L - x)) / kappa).epsilon(1e-12));
  }
}

TEST_CASE("grid spacing and endpoints") {
  const Grid g = Grid::with_nodes(15.0, 1501);
  CHECK(g.size() == 1501);
  CHECK(g.cells() == 1500);
  CHECK(g.spacing() == doctest::Approx(0.01));
  CHECK(g[1500] == 15.0);
  CHECK(g.nodes().size() == 1501u);
}
