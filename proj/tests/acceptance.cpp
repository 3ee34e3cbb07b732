// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "panvein/evolution.hpp"
#include "panvein/scenario.hpp"
#include "panvein/stability.hpp"
#include "panvein/steady_parabolic.hpp"

using namespace panvein;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Grid kGrid = Grid::with_nodes(15.0, 1501);
const SigmaProfile kSigma = SigmaProfile::homogeneous(15.0, 15.0);
const std::vector<double> kSpeeds{0.5, 3.0, 4.2, 9.0};

double sup_gap(const std::vector<double>& a1, const std::vector<double>& a2,
               const std::vector<double>& b1, const std::vector<double>& b2) {
  double d = 0.0;
  for (std::size_t j = 0; j < a1.size(); ++j) {
    d = std::max({d, std::abs(a1[j] - b1[j]), std::abs(a2[j] - b2[j])});
  }
  return d;
}

// 1. equilibrium bounds and eigenvalue signs
Outcome equilibrium_bounds() {
  const auto eq = find_equilibrium(ModelParams{}, 15.0);
  bool ok = eq.G_star > 16.0 && eq.G_star < 32.0 && eq.I_star > 0.0 && eq.I_star < 375.0 &&
            eq.lambda1.real() < 0.0 && eq.lambda2.real() < 0.0;
  gen::Source src(1001);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = gen::reaction_draw(src);
    const auto e = find_equilibrium(d.p, d.sigma);
    const bool hold = e.G_star > e.bounds.G_lower && e.G_star < e.bounds.G_upper &&
                      e.I_star > 0.0 && e.I_star < d.sigma / d.p.d_i &&
                      e.lambda1.real() < 0.0 && e.lambda2.real() < 0.0;
    if (!hold) ++bad;
  }
  ok = ok && bad == 0;
  return {ok, fmt("G*=%.6f I*=%.4f lambda=(%.6g, %.6g); random draws violating: %d/1000",
                  eq.G_star, eq.I_star, eq.lambda1.real(), eq.lambda2.real(), bad)};
}

// 2. worked stability example
Outcome stability_example() {
  const auto roots = quadratic_roots_from_coefficients(2.0, -2.8054, 0.8057);
  const double r1 = std::abs(roots[0]), r2 = std::abs(roots[1]);
  const auto v = verdict(roots, 15.0 / 4.2);
  const bool roots_ok = std::abs(r1 - 1.0003) <= 5e-4 && std::abs(r2 - 2.4817) <= 5e-4 &&
                        v.verdict == Verdict::Stable;

  const auto prof = solve_shooting(ModelParams{}, kSigma, kGrid);
  const auto rep = analyze_stability(prof, ModelParams{}, kSigma);
  Mat2 printed;
  printed << 0.9978, -0.0004, 1.9048, 0.8068;
  const double worst = (rep.b_matrix - printed).cwiseAbs().maxCoeff();
  const bool b_ok = worst <= 0.02;
  const auto& b = rep.b_matrix;
  return {roots_ok && b_ok,
          fmt("printed quadratic roots (%.5f, %.5f) verdict %s; pipeline b=[[%.4f, %.4f], [%.4f, "
              "%.4f]] worst entry gap %.4f (tol 0.02), pipeline roots (%.4f, %.4f) verdict %s",
              r1, r2, to_string(v.verdict), b(0, 0), b(0, 1), b(1, 0), b(1, 1), worst,
              std::abs(rep.roots[0]), std::abs(rep.roots[1]), to_string(rep.verdict))};
}

// 3. boundary ratios over the catalog and speeds
Outcome boundary_ratios() {
  const auto cat = SigmaProfile::catalog(15.0, 15.0);
  double worst = 0.0;
  int runs = 0;
  for (const auto& [name, sigma] : cat) {
    for (double c : kSpeeds) {
      ModelParams p;
      p.c = c;
      const auto prof = solve_shooting(p, sigma, kGrid);
      worst = std::max(worst, std::abs(prof.G.back() / prof.G.front() - p.alpha1) / p.alpha1);
      worst = std::max(worst, std::abs(prof.I.back() / prof.I.front() - p.alpha2) / p.alpha2);
      ++runs;
    }
  }
  return {worst <= 1e-6, fmt("%d profiles, worst relative ratio error %.3g", runs, worst)};
}

// 4. levels and shapes
Outcome levels() {
  const auto prof = solve_shooting(ModelParams{}, kSigma, kGrid);
  bool monotone = true;
  for (std::size_t j = 1; j < prof.I.size(); ++j) monotone = monotone && prof.I[j] > prof.I[j - 1];
  const double I0 = prof.I.front(), IL = prof.I.back();
  double chord = 0.0;
  for (std::size_t j = 0; j < prof.I.size(); ++j) {
    const double line = I0 + (IL - I0) * static_cast<double>(j) / (prof.I.size() - 1);
    chord = std::max(chord, std::abs(prof.I[j] - line));
  }
  const double chord_frac = chord / (IL - I0);
  const double meanG = quad_trapz(prof.G, kGrid.spacing()) / 15.0;
  auto within = [](double v, double ref) { return std::abs(v - ref) <= 0.25 * ref; };
  const bool band = within(meanG, 7.0) && within(I0, 56.0) && within(IL, 112.0);

  bool ordering = true;
  double prevG = -1.0, prevI0 = std::numeric_limits<double>::infinity(), prevIL = prevI0;
  std::string table;
  for (double c : kSpeeds) {
    ModelParams p;
    p.c = c;
    const auto pr = solve_shooting(p, kSigma, kGrid);
    const double mg = quad_trapz(pr.G, kGrid.spacing()) / 15.0;
    ordering = ordering && mg > prevG && pr.I.front() < prevI0 && pr.I.back() < prevIL;
    prevG = mg;
    prevI0 = pr.I.front();
    prevIL = pr.I.back();
    table += fmt(" c=%g:G=%.2f,I=%.1f->%.1f", c, mg, pr.I.front(), pr.I.back());
  }
  const bool shape = monotone && chord_frac <= 0.10;
  return {shape && (band || ordering),
          fmt("insulin monotone=%s chord deviation %.3f of range; mean G %.2f mM, I %.2f -> %.2f "
              "pM; band %s, ordering %s;%s",
              monotone ? "yes" : "no", chord_frac, meanG, I0, IL, band ? "inside" : "outside",
              ordering ? "matches" : "differs", table.c_str())};
}

// 5. cross-solver agreement
Outcome cross_solver() {
  const auto s = solve_shooting(ModelParams{}, kSigma, kGrid);
  const auto pc = solve_picard(ModelParams{}, 15.0, kGrid);
  const double hyper = sup_gap(s.G, s.I, pc.G, pc.I);
  ModelParams p;
  p.eps = 0.05;
  const auto col = solve_eps_collocation(p, kSigma, 0.05, kGrid);
  const auto blk = solve_eps_block(p, 15.0, 0.05, kGrid);
  const double para = sup_gap(col.G, col.I, blk.G, blk.I);
  return {hyper <= 1e-6 && para <= 1e-5,
          fmt("shooting vs fixed point %.3g (tol 1e-6); collocation vs block at eps=0.05 %.3g "
              "(tol 1e-5)",
              hyper, para)};
}

// 6. singular perturbation rates
Outcome singular_perturbation() {
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  const auto table = eps_sweep(ModelParams{}, 15.0, eps, kGrid, EpsSolver::Block, 4);
  bool all_ok = true;
  std::string gaps;
  for (const auto& e : table.entries) {
    all_ok = all_ok && e.ok;
    gaps += fmt(" %.3g", e.gap);
  }
  const auto eq = find_equilibrium(ModelParams{}, 15.0);
  const auto lin = perturbation_gap_linear(eps, eq, kGrid, Vec2(1.0, 10.0));
  const bool ok = all_ok && table.monotone && table.order >= 0.8 && lin.slope >= 0.8 &&
                  lin.slope <= 1.2;
  return {ok, fmt("profile gaps%s; monotone=%s order %.3f (>= 0.8); linear operator order %.3f "
                  "(in [0.8, 1.2])",
                  gaps.c_str(), table.monotone ? "yes" : "no", table.order, lin.slope)};
}

// 7. dynamic contraction toward the steady profile
Outcome dynamic_contraction() {
  const auto ref = solve_shooting(ModelParams{}, kSigma, kGrid);
  auto G = ref.G, I = ref.I;
  for (auto& v : G) v *= 1.01;
  for (auto& v : I) v *= 1.01;
  RunOptions opt;
  opt.t_max = 500.0;
  opt.tol = 0.0;
  const auto trace = run_to_steady(G, I, ModelParams{}, kSigma, ref, opt);
  const double ratio = trace.distances.back() / trace.distances.front();
  const bool tail = non_increasing_tail(trace);
  return {ratio <= 0.10 && tail,
          fmt("distance %.4g -> %.4g after %.0f min (ratio %.3f, need <= 0.10); final half "
              "non-increasing=%s; fitted rate %.3g/min",
              trace.distances.front(), trace.distances.back(), trace.times.back(), ratio,
              tail ? "yes" : "no", fit_decay_rate(trace))};
}

// 8. certificate radius
Outcome certificate() {
  gen::Source src(1008);
  int valid = 0, violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p;
    p.alpha2 = 1.0 + std::pow(10.0, src.uniform(-7.0, -4.0));
    p.L = src.uniform(5.0, 20.0);
    p.c = src.uniform(0.5, 9.0);
    const Grid g = Grid::with_nodes(p.L, 1001);
    const auto cert = contraction_certificate(p, 15.0, g);
    if (!cert.valid) continue;
    ++valid;
    const auto eq = find_equilibrium(p, 15.0);
    const auto prof = solve_picard(p, 15.0, g);
    double dist = 0.0;
    for (std::size_t j = 0; j < prof.G.size(); ++j) {
      dist = std::max(dist, (Vec2(prof.G[j], prof.I[j]) - eq.u_star()).norm());
    }
    worst_margin = std::min(worst_margin, cert.r + 1e-8 - dist);
    if (dist > cert.r + 1e-8) ++violations;
  }
  return {valid > 0 && violations == 0,
          fmt("%d/20 sample points certified, %d violations, smallest margin r - |u - u*| = %.3g",
              valid, violations, worst_margin)};
}

// 9. determinism and format
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "panvein_acceptance";
  fs::remove_all(root);
  bool same = true, header = true;
  int files = 0;
  for (const char* mode : {"sigma-catalog", "velocity-sweep", "evolve"}) {
    std::vector<ScenarioResult> results;
    for (int k = 0; k < 2; ++k) {
      auto cfg = parse_config(std::string("mode = ") + mode + "\n");
      cfg.seed = 17;
      if (std::string(mode) == "evolve") {
        cfg.grid_n = 301;
        cfg.t_max = 50.0;
      }
      cfg.workers = k == 0 ? 1 : 4;
      cfg.out_dir = (root / (std::string(mode) + "_" + std::to_string(k))).string();
      results.push_back(run(cfg));
    }
    for (const auto& e : results[0].manifest) {
      if (e.file.size() < 4 || e.file.substr(e.file.size() - 4) != ".csv") continue;
      ++files;
      std::ifstream a(fs::path(results[0].config.out_dir) / e.file, std::ios::binary);
      std::ifstream b(fs::path(results[1].config.out_dir) / e.file, std::ios::binary);
      std::stringstream sa, sb;
      sa << a.rdbuf();
      sb << b.rdbuf();
      same = same && sa.str() == sb.str() && !sa.str().empty();
      const bool profile = e.file.rfind("sigma_", 0) == 0 || e.file.rfind("velocity_c", 0) == 0 ||
                           e.file == "evolution_final.csv";
      if (profile) header = header && sa.str().rfind("x_cm,G_mM,I_pM\n", 0) == 0;
    }
  }
  return {same && header && files > 0,
          fmt("%d CSV files compared across two runs: identical=%s, profile headers ok=%s", files,
              same ? "yes" : "no", header ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "equilibrium bounds", 5.0, equilibrium_bounds},
      {2, "stability worked example", 10.0, stability_example},
      {3, "boundary ratios", 30.0, boundary_ratios},
      {4, "quantitative levels", 60.0, levels},
      {5, "cross-solver oracle", 60.0, cross_solver},
      {6, "singular perturbation", 120.0, singular_perturbation},
      {7, "dynamic stability", 60.0, dynamic_contraction},
      {8, "contraction certificate", 120.0, certificate},
      {9, "determinism and format", 120.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] criterion %d (%s): %s [%.2f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, out.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
