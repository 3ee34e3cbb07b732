#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "panvein/evolution.hpp"

using namespace panvein;

namespace {

const SigmaProfile kSigma = SigmaProfile::homogeneous(15.0, 15.0);

SteadyProfile steady_on(int nodes, const ModelParams& p = {}) {
  return solve_shooting(p, kSigma, Grid::with_nodes(p.L, nodes));
}

double drift_after(double t, int nodes) {
  const auto ref = steady_on(nodes);
  auto s = make_state(ref.grid, ref.G, ref.I, ModelParams{});
  while (s.t < t - 1e-12) {
    s.dt = std::min(stable_time_step(s.grid, ModelParams{}), t - s.t);
    s = step(s, ModelParams{}, kSigma);
  }
  return sup_distance(s, ref);
}

}  // namespace

TEST_CASE("stable step follows the CFL bound") {
  const Grid g = Grid::with_nodes(15.0, 1501);
  ModelParams p;
  CHECK(stable_time_step(g, p) == doctest::Approx(0.9 * 0.01 / 4.2));
  CHECK(cfl_limit(g, p) == doctest::Approx(0.9 * 0.01 / 4.2));
  p.eps = 0.05;
  CHECK(cfl_limit(g, p) == doctest::Approx(0.9 * 1e-4 / 0.1));
  CHECK(stable_time_step(g, p) == doctest::Approx(0.9 / (420.0 + 1000.0)));
  CHECK(stable_time_step(g, p) <= cfl_limit(g, p));
  EvolutionTerms no_transport;
  no_transport.advection = false;
  no_transport.diffusion = false;
  CHECK(stable_time_step(g, p, no_transport) == doctest::Approx(0.9 * 0.01));
}

TEST_CASE("oversized steps are refused") {
  const auto ref = steady_on(301);
  auto s = make_state(ref.grid, ref.G, ref.I, ModelParams{});
  s.dt *= 1.2;
  try {
    step(s, ModelParams{}, kSigma);
    FAIL("expected a step-size error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepSize);
  }
  CHECK_THROWS_AS(make_state(ref.grid, {1.0}, {1.0}, ModelParams{}), Error);
}

TEST_CASE("non-finite states are reported") {
  const auto ref = steady_on(101);
  auto G = ref.G;
  G[40] = std::nan("");
  const auto s = make_state(ref.grid, G, ref.I, ModelParams{});
  try {
    step(s, ModelParams{}, kSigma);
    FAIL("expected blow-up");
  } catch (const IntegrationError& e) {
    CHECK(e.code() == ErrorCode::BlowUp);
  }
  CHECK_THROWS_AS(run_to_steady(G, ref.I, ModelParams{}, kSigma, ref), Error);
}

TEST_CASE("reaction-only nodes follow the kinetics") {
  ModelParams p;
  EvolutionTerms terms;
  terms.advection = false;
  terms.diffusion = false;
  const Grid g = Grid::with_nodes(15.0, 11);
  std::vector<double> G(11), I(11);
  for (std::size_t j = 0; j < 11; ++j) {
    G[j] = 5.0 + 3.0 * j;
    I[j] = 200.0 - 10.0 * j;
  }
  auto run_nodes = [&](double dt) {
    auto s = make_state(g, G, I, p, terms);
    while (s.t < 10.0 - 1e-12) {
      s.dt = std::min(dt, 10.0 - s.t);
      s = step(s, p, kSigma, terms);
    }
    return s;
  };
  auto f = [&](double, const Vec2& u) -> Vec2 { return reaction_rhs(u[0], u[1], 15.0, p); };
  double err_coarse = 0.0, err_fine = 0.0;
  const auto coarse = run_nodes(0.1), fine = run_nodes(0.05);
  for (std::size_t j = 0; j < 11; ++j) {
    Vec2 u(G[j], I[j]);
    for (int k = 0; k < 1000; ++k) u = rk4_step<Vec2>(f, k * 0.01, u, 0.01);
    err_coarse = std::max(err_coarse, std::abs(coarse.I[j] - u[1]));
    err_fine = std::max(err_fine, std::abs(fine.I[j] - u[1]));
  }
  CHECK(err_fine < 0.1);
  CHECK(err_coarse / err_fine == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("inflow node carries the boundary coupling") {
  const auto ref = steady_on(301);
  auto s = make_state(ref.grid, ref.G, ref.I, ModelParams{});
  for (int i = 0; i < 10; ++i) s = step(s, ModelParams{}, kSigma);
  CHECK(s.G.front() == doctest::Approx(s.G.back() / 1.0));
  CHECK(s.I.front() == doctest::Approx(s.I.back() / 2.0));
}

TEST_CASE("steady profiles are discrete near-fixed points") {
  auto defect = [](int nodes) {
    const auto ref = steady_on(nodes);
    const auto s = make_state(ref.grid, ref.G, ref.I, ModelParams{});
    const auto n = step(s, ModelParams{}, kSigma);
    double d = 0.0;
    for (std::size_t j = 0; j < n.G.size(); ++j) {
      d = std::max({d, std::abs(n.G[j] - ref.G[j]), std::abs(n.I[j] - ref.I[j])});
    }
    return d / s.dt;
  };
  const double coarse = defect(376), fine = defect(751);
  CHECK(fine < 0.01);
  CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("refinement halves the drift from the steady state") {
  const double coarse = drift_after(20.0, 376);
  const double fine = drift_after(20.0, 751);
  CHECK(coarse / fine >= 1.8);
}

TEST_CASE("uniform transport with unit coupling conserves a constant") {
  ModelParams p;
  p.alpha2 = 1.0;
  EvolutionTerms terms;
  terms.reaction = false;
  const Grid g = Grid::with_nodes(15.0, 201);
  auto s = make_state(g, std::vector<double>(201, 3.0), std::vector<double>(201, 7.0), p, terms);
  for (int i = 0; i < 500; ++i) s = step(s, p, kSigma, terms);
  for (std::size_t j = 0; j < s.G.size(); ++j) {
    REQUIRE(s.G[j] == doctest::Approx(3.0).epsilon(1e-13));
    REQUIRE(s.I[j] == doctest::Approx(7.0).epsilon(1e-13));
  }
}

TEST_CASE("positivity from perturbed steady data") {
  gen::Source src(61);
  for (int trial = 0; trial < 4; ++trial) {
    ModelParams p;
    p.c = src.uniform(0.5, 9.0);
    p.eps = trial % 2 ? 0.01 : 0.0;
    const auto ref = steady_on(301, p);
    auto G = ref.G, I = ref.I;
    for (std::size_t j = 0; j < G.size(); ++j) {
      G[j] *= 1.0 + 0.05 * src.uniform(-1.0, 1.0);
      I[j] *= 1.0 + 0.05 * src.uniform(-1.0, 1.0);
    }
    RunOptions opt;
    opt.t_max = 100.0;
    opt.tol = 0.0;
    const auto trace = run_to_steady(G, I, p, kSigma, ref, opt);
    for (std::size_t j = 0; j < G.size(); ++j) {
      REQUIRE(trace.final_state.G[j] > 0.0);
      REQUIRE(trace.final_state.I[j] > 0.0);
    }
  }
}

TEST_CASE("decay-rate fit and tail monotonicity on a synthetic trace") {
  EvolutionTrace t;
  for (int i = 0; i <= 100; ++i) {
    t.times.push_back(i);
    t.distances.push_back(3.0 * std::exp(-0.02 * i));
  }
  CHECK(fit_decay_rate(t) == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(non_increasing_tail(t));
  t.distances[90] *= 1.5;
  CHECK_FALSE(non_increasing_tail(t));
}

TEST_CASE("transport semigroup contracts with unit coupling") {
  ModelParams p;
  p.alpha2 = 1.0;
  const Grid g = Grid::with_nodes(15.0, 201);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto rep = semigroup_contraction_check(p, g, {1.0, 5.0}, seed, 5);
    CHECK(rep.samples == 5);
    CHECK(rep.max_ratio <= 1.0 + 1e-12);
  }
  p.eps = 0.02;
  CHECK(semigroup_contraction_check(p, g, {2.0}, 4, 5).max_ratio <= 1.0 + 1e-12);
  const auto a = semigroup_contraction_check(ModelParams{}, g, {5.0}, 9, 5);
  const auto b = semigroup_contraction_check(ModelParams{}, g, {5.0}, 9, 5);
  CHECK(a.max_ratio == b.max_ratio);
}
