#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "generators.hpp"
#include "panvein/model.hpp"

using namespace panvein;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // unreachable in passing tests
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("reference parameters validate") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.transit() == doctest::Approx(15.0 / 4.2));
}

TEST_CASE("parameter validation names the field") {
  ModelParams p;
  p.alpha1 = 0.5;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::Validation);
  CHECK(message_of([&] { p.validate(); }).find("alpha1") != std::string::npos);
  p = {};
  p.c = 0.0;
  CHECK(message_of([&] { p.validate(); }).find("params.c") != std::string::npos);
  p = {};
  p.eps = -1e-3;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::Validation);
}

TEST_CASE("sigma profile factories") {
  const auto h = SigmaProfile::homogeneous(15.0, 15.0);
  CHECK(h.is_constant());
  CHECK(h.constant_value() == 15.0);
  CHECK(h(7.0) == 15.0);

  const auto inc = SigmaProfile::linear(7.5, 22.5, 15.0);
  CHECK(inc.kind() == SigmaKind::LinearIncreasing);
  CHECK(inc(7.5) == doctest::Approx(15.0));
  CHECK(code_of([&] { (void)inc.constant_value(); }) == ErrorCode::Mode);
  CHECK(SigmaProfile::linear(22.5, 7.5, 15.0).kind() == SigmaKind::LinearDecreasing);

  const auto q = SigmaProfile::quadratic(22.5, 7.5, 22.5, 15.0);
  CHECK(q.kind() == SigmaKind::Quadratic);
  CHECK(q(7.5) == doctest::Approx(7.5));
  CHECK(q.inf() == doctest::Approx(7.5));
  CHECK(q.sup() == doctest::Approx(22.5));
  const auto rq = SigmaProfile::quadratic(7.5, 22.5, 7.5, 15.0);
  CHECK(rq.kind() == SigmaKind::ReversedQuadratic);
  CHECK(rq.sup() == doctest::Approx(22.5));

  const auto cu = SigmaProfile::custom({{0.0, 10.0}, {5.0, 20.0}, {15.0, 10.0}});
  CHECK(cu.kind() == SigmaKind::Custom);
  CHECK(cu(2.5) == doctest::Approx(15.0));
  CHECK(cu.sup() == doctest::Approx(20.0));
}

TEST_CASE("sigma profile validity and domain") {
  CHECK(code_of([] { SigmaProfile::quadratic(1.0, -2.0, 1.0, 15.0); }) == ErrorCode::ProfileValidity);
  CHECK(code_of([] { SigmaProfile::linear(0.0, 5.0, 15.0); }) == ErrorCode::ProfileValidity);
  const auto h = SigmaProfile::homogeneous(15.0, 15.0);
  CHECK(code_of([&] { (void)h(15.5); }) == ErrorCode::Domain);
  CHECK(code_of([&] { (void)h(-0.1); }) == ErrorCode::Domain);
  CHECK_NOTHROW((void)h(15.0));
}

TEST_CASE("sigma catalog") {
  const auto cat = SigmaProfile::catalog(15.0, 15.0);
  REQUIRE(cat.size() == 5u);
  const char* names[] = {"homogeneous", "linear_inc", "linear_dec", "quadratic", "reversed_quadratic"};
  const SigmaKind kinds[] = {SigmaKind::Homogeneous, SigmaKind::LinearIncreasing,
                             SigmaKind::LinearDecreasing, SigmaKind::Quadratic,
                             SigmaKind::ReversedQuadratic};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(cat[i].first == names[i]);
    CHECK(cat[i].second.kind() == kinds[i]);
  }
  CHECK(sigma_kind_from_string("reversed-quadratic") == SigmaKind::ReversedQuadratic);
  CHECK(code_of([] { sigma_kind_from_string("cubic"); }) == ErrorCode::Validation);
}

TEST_CASE("reference equilibrium") {
  const auto eq = find_equilibrium(ModelParams{}, 15.0);
  CHECK(eq.G_star == doctest::Approx(19.432132672851754).epsilon(1e-11));
  CHECK(eq.I_star == doctest::Approx(308.76693263742897).epsilon(1e-11));
  CHECK(eq.lambda1.real() == doctest::Approx(-0.00431008).epsilon(1e-5));
  CHECK(eq.lambda2.real() == doctest::Approx(-0.03877758).epsilon(1e-5));
  CHECK(eq.lambda1.imag() == 0.0);
  CHECK(eq.bounds.G_lower == doctest::Approx(16.0));
  CHECK(eq.bounds.G_upper == doctest::Approx(32.0));
  CHECK(eq.bounds.I_upper == doctest::Approx(375.0));
  const Vec2 f = reaction_rhs(eq.G_star, eq.I_star, 15.0, ModelParams{});
  CHECK(std::abs(f[0]) < 1e-14);
  CHECK(std::abs(f[1]) < 1e-10);
}

TEST_CASE("no positive equilibrium without secretion") {
  CHECK(code_of([] { find_equilibrium(ModelParams{}, 0.0); }) != ErrorCode::NonConvergence);
}

TEST_CASE("equilibrium properties over random draws") {
  gen::Source src(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = gen::reaction_draw(src);
    const auto eq = find_equilibrium(d.p, d.sigma);
    CHECK(eq.G_star > eq.bounds.G_lower);
    CHECK(eq.G_star < eq.bounds.G_upper);
    CHECK(eq.I_star > 0.0);
    CHECK(eq.I_star < d.sigma / d.p.d_i);
    CHECK(eq.lambda1.real() < 0.0);
    CHECK(eq.lambda2.real() < 0.0);
    CHECK(eq.lambda1.real() >= eq.lambda2.real());

    const Vec2 f = reaction_rhs(eq.G_star, eq.I_star, d.sigma, d.p);
    CHECK(std::abs(f[0]) <= 1e-10 * d.p.G_in);
    CHECK(std::abs(f[1]) <= 1e-10 * d.sigma);

    // closed-form eigenvalues against a general eigen-solver
    Eigen::EigenSolver<Mat2> es(eq.B);
    auto ev = es.eigenvalues();
    std::array<std::complex<double>, 2> sorted{ev[0], ev[1]};
    std::sort(sorted.begin(), sorted.end(),
              [](auto x, auto y) { return x.real() > y.real(); });
    const double scale = std::abs(eq.B.trace()) + std::sqrt(std::abs(eq.B.determinant()));
    CHECK(std::abs(sorted[0] - eq.lambda1) <= 1e-9 * scale);
    CHECK(std::abs(sorted[1] - eq.lambda2) <= 1e-9 * scale);
  }
}

TEST_CASE("decay envelope holds on sampled positions") {
  gen::Source src(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = gen::reaction_draw(src);
    const auto eq = find_equilibrium(d.p, d.sigma);
    for (int k = 0; k < 50; ++k) {
      const double x = src.uniform(0.0, 200.0 / eq.rho);
      CHECK(norm2(mat_exp<2>(eq.B, x)) <= eq.M * std::exp(-eq.rho * x) * (1 + 1e-9));
    }
  }
}

TEST_CASE("jacobian matches finite differences") {
  gen::Source src(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = gen::reaction_draw(src);
    const double G = src.around(10.0), I = src.around(100.0);
    const Mat2 J = reaction_jacobian(G, I, d.sigma, d.p);
    const double hG = 1e-6 * G, hI = 1e-6 * I;
    const Vec2 dG = (reaction_rhs(G + hG, I, d.sigma, d.p) - reaction_rhs(G - hG, I, d.sigma, d.p)) / (2 * hG);
    const Vec2 dI = (reaction_rhs(G, I + hI, d.sigma, d.p) - reaction_rhs(G, I - hI, d.sigma, d.p)) / (2 * hI);
    CHECK(std::abs(J(0, 0) - dG[0]) <= 1e-6 * (std::abs(J(0, 0)) + 1e-12));
    CHECK(std::abs(J(1, 0) - dG[1]) <= 1e-6 * (std::abs(J(1, 0)) + 1e-12));
    CHECK(std::abs(J(0, 1) - dI[0]) <= 1e-6 * (std::abs(J(0, 1)) + 1e-12));
    CHECK(std::abs(J(1, 1) - dI[1]) <= 1e-6 * (std::abs(J(1, 1)) + 1e-12));
  }
}

TEST_CASE("remainder is quadratic near the equilibrium") {
  const auto eq = find_equilibrium(ModelParams{}, 15.0);
  const Vec2 zero = remainder_F(eq.G_star, eq.I_star, eq);
  CHECK(zero.norm() < 1e-12);
  const Vec2 dir(1.0, 10.0);
  const Vec2 f1 = remainder_F(eq.G_star + 1e-2 * dir[0], eq.I_star + 1e-2 * dir[1], eq);
  const Vec2 f2 = remainder_F(eq.G_star + 5e-3 * dir[0], eq.I_star + 5e-3 * dir[1], eq);
  CHECK(f1.norm() / f2.norm() == doctest::Approx(4.0).epsilon(0.02));
  const auto sig = SigmaProfile::homogeneous(15.0, 15.0);
  const Vec2 g = remainder_F(eq.G_star + 0.3, eq.I_star - 2.0, eq, sig);
  const Vec2 g0 = remainder_F(eq.G_star + 0.3, eq.I_star - 2.0, eq);
  CHECK((g - g0).norm() < 1e-14);
}

TEST_CASE("nonlinearity constant and growth factor") {
  const auto eq = find_equilibrium(ModelParams{}, 15.0);
  const double b2 = 81.0, G2 = eq.G_star * eq.G_star;
  CHECK(nonlinearity_constant(eq) == doctest::Approx(1e-5 + 15.0 * b2 / ((b2 + G2) * (b2 + G2))));
  const double r1 = remainder_growth_factor(eq, 1.0);
  const double r2 = remainder_growth_factor(eq, 10.0);
  CHECK(r1 >= 0.0);
  CHECK(r2 >= r1);
}
