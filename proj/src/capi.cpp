#include "panvein/panvein.h"

#include <algorithm>
#include <exception>
#include <new>
#include <string>

#include "panvein/scenario.hpp"
#include "panvein/stability.hpp"
#include "panvein/steady_hyperbolic.hpp"
#include "panvein/steady_parabolic.hpp"

struct pv_sigma {
  panvein::SigmaProfile profile;
};

struct pv_profile {
  panvein::SteadyProfile profile;
};

struct pv_scenario {
  panvein::ScenarioConfig config;
  panvein::ScenarioResult result;
  mutable std::string echo;
};

namespace {

thread_local std::string last_error;

pv_status fail(pv_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
pv_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return PV_OK;
  } catch (const panvein::Error& e) {
    return fail(static_cast<pv_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PV_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PV_INTERNAL, e.what());
  }
}

panvein::ModelParams to_model(const pv_params* p) {
  if (!p) throw panvein::Error(panvein::ErrorCode::InvalidArgument, "params is null");
  panvein::ModelParams m;
  m.c = p->c;
  m.eps = p->eps;
  m.L = p->L;
  m.G_in = p->G_in;
  m.a = p->a;
  m.b = p->b;
  m.d_i = p->d_i;
  m.alpha1 = p->alpha1;
  m.alpha2 = p->alpha2;
  m.validate();
  return m;
}

template <typename T>
void require(const T* ptr, const char* name) {
  if (!ptr) {
    throw panvein::Error(panvein::ErrorCode::InvalidArgument, std::string(name) + " is null");
  }
}

void require_grid(int grid_n) {
  if (grid_n < 3) throw panvein::Error(panvein::ErrorCode::InvalidArgument, "grid_n must be >= 3");
}

template <typename F>
pv_status make_sigma(pv_sigma** out, F&& f) {
  if (!out) return fail(PV_INVALID_ARGUMENT, "out is null");
  *out = nullptr;
  return guarded([&] { *out = new pv_sigma{f()}; });
}

}  // namespace

extern "C" {

const char* pv_version(void) { return "0.1.0"; }

const char* pv_status_string(pv_status status) {
  if (status == PV_OK) return "ok";
  if (status == PV_INTERNAL) return "internal";
  if (status >= PV_INVALID_ARGUMENT && status <= PV_IO) {
    return panvein::to_string(static_cast<panvein::ErrorCode>(status));
  }
  return "unknown";
}

const char* pv_last_error(void) { return last_error.c_str(); }

pv_params pv_params_default(void) {
  const panvein::ModelParams m;
  return {m.c, m.eps, m.L, m.G_in, m.a, m.b, m.d_i, m.alpha1, m.alpha2};
}

pv_status pv_params_validate(const pv_params* params) {
  return guarded([&] { to_model(params); });
}

pv_status pv_sigma_homogeneous(double base, double length, pv_sigma** out) {
  return make_sigma(out, [&] { return panvein::SigmaProfile::homogeneous(base, length); });
}

pv_status pv_sigma_linear(double end0, double endL, double length, pv_sigma** out) {
  return make_sigma(out, [&] { return panvein::SigmaProfile::linear(end0, endL, length); });
}

pv_status pv_sigma_quadratic(double end0, double vertex, double endL, double length,
                             pv_sigma** out) {
  return make_sigma(out,
                    [&] { return panvein::SigmaProfile::quadratic(end0, vertex, endL, length); });
}

pv_status pv_sigma_eval(const pv_sigma* sigma, double x, double* out) {
  return guarded([&] {
    require(sigma, "sigma");
    require(out, "out");
    *out = sigma->profile(x);
  });
}

void pv_sigma_free(pv_sigma* sigma) { delete sigma; }

pv_status pv_find_equilibrium(const pv_params* params, double sigma, pv_equilibrium* out) {
  return guarded([&] {
    require(out, "out");
    const auto eq = panvein::find_equilibrium(to_model(params), sigma);
    *out = {eq.G_star,          eq.I_star,          eq.lambda1.real(), eq.lambda1.imag(),
            eq.lambda2.real(), eq.lambda2.imag(), eq.M,             eq.rho};
  });
}

pv_status pv_solve_shooting(const pv_params* params, const pv_sigma* sigma, int grid_n, double tol,
                            pv_profile** out) {
  return guarded([&] {
    require(sigma, "sigma");
    require(out, "out");
    require_grid(grid_n);
    *out = nullptr;
    const auto p = to_model(params);
    panvein::ShootingOptions opt;
    if (tol > 0.0) opt.tol = tol;
    *out = new pv_profile{panvein::solve_shooting(
        p, sigma->profile, panvein::Grid::with_nodes(p.L, grid_n), opt)};
  });
}

pv_status pv_solve_picard(const pv_params* params, double sigma, int grid_n, double tol,
                          pv_profile** out) {
  return guarded([&] {
    require(out, "out");
    require_grid(grid_n);
    *out = nullptr;
    const auto p = to_model(params);
    panvein::PicardOptions opt;
    if (tol > 0.0) opt.tol = tol;
    *out = new pv_profile{
        panvein::solve_picard(p, sigma, panvein::Grid::with_nodes(p.L, grid_n), opt)};
  });
}

pv_status pv_solve_eps_collocation(const pv_params* params, const pv_sigma* sigma, int grid_n,
                                   pv_profile** out) {
  return guarded([&] {
    require(sigma, "sigma");
    require(out, "out");
    require_grid(grid_n);
    *out = nullptr;
    const auto p = to_model(params);
    *out = new pv_profile{panvein::solve_eps_collocation(p, sigma->profile, p.eps,
                                                         panvein::Grid::with_nodes(p.L, grid_n))
                              .as_steady()};
  });
}

pv_status pv_solve_eps_block(const pv_params* params, double sigma, int grid_n, pv_profile** out) {
  return guarded([&] {
    require(out, "out");
    require_grid(grid_n);
    *out = nullptr;
    const auto p = to_model(params);
    *out = new pv_profile{
        panvein::solve_eps_block(p, sigma, p.eps, panvein::Grid::with_nodes(p.L, grid_n))
            .as_steady()};
  });
}

size_t pv_profile_size(const pv_profile* profile) {
  return profile ? profile->profile.G.size() : 0;
}

pv_status pv_profile_copy(const pv_profile* profile, double* x, double* G, double* I,
                          size_t capacity) {
  return guarded([&] {
    require(profile, "profile");
    const auto& pr = profile->profile;
    const size_t n = std::min(capacity, pr.G.size());
    for (size_t j = 0; j < n; ++j) {
      if (x) x[j] = pr.grid[static_cast<int>(j)];
      if (G) G[j] = pr.G[j];
      if (I) I[j] = pr.I[j];
    }
  });
}

pv_status pv_profile_residuals(const pv_profile* profile, double* res_G, double* res_I) {
  return guarded([&] {
    require(profile, "profile");
    if (res_G) *res_G = profile->profile.residual_G;
    if (res_I) *res_I = profile->profile.residual_I;
  });
}

void pv_profile_free(pv_profile* profile) { delete profile; }

pv_status pv_analyze_stability(const pv_profile* profile, const pv_params* params,
                               const pv_sigma* sigma, pv_stability* out) {
  return guarded([&] {
    require(profile, "profile");
    require(sigma, "sigma");
    require(out, "out");
    const auto rep = panvein::analyze_stability(profile->profile, to_model(params), sigma->profile);
    pv_stability s{};
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) s.b_matrix[2 * r + c] = rep.b_matrix(r, c);
    }
    for (int i = 0; i < 3; ++i) s.quad_coeffs[i] = rep.quad_coeffs[static_cast<size_t>(i)];
    for (int i = 0; i < 2; ++i) {
      s.root_re[i] = rep.roots[static_cast<size_t>(i)].real();
      s.root_im[i] = rep.roots[static_cast<size_t>(i)].imag();
    }
    s.lead_re = rep.lead_re;
    s.verdict = static_cast<int>(rep.verdict);
    *out = s;
  });
}

pv_status pv_scenario_load(const char* path, pv_scenario** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new pv_scenario{panvein::load_config(path), {}, {}};
  });
}

pv_status pv_scenario_parse(const char* text, pv_scenario** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    *out = new pv_scenario{panvein::parse_config(text), {}, {}};
  });
}

pv_status pv_scenario_set_mode(pv_scenario* scenario, const char* mode) {
  return guarded([&] {
    require(scenario, "scenario");
    require(mode, "mode");
    scenario->config.mode = panvein::scenario_mode_from_string(mode);
  });
}

pv_status pv_scenario_set_out_dir(pv_scenario* scenario, const char* dir) {
  return guarded([&] {
    require(scenario, "scenario");
    require(dir, "dir");
    scenario->config.out_dir = dir;
  });
}

pv_status pv_scenario_set_grid_n(pv_scenario* scenario, int grid_n) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->config.grid_n = grid_n;
  });
}

pv_status pv_scenario_set_tol(pv_scenario* scenario, double tol) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->config.tol = tol;
  });
}

pv_status pv_scenario_set_workers(pv_scenario* scenario, int workers) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->config.workers = workers;
  });
}

pv_status pv_scenario_set_seed(pv_scenario* scenario, uint64_t seed) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->config.seed = seed;
  });
}

pv_status pv_scenario_run(pv_scenario* scenario) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->result = panvein::run(scenario->config);
  });
}

const char* pv_scenario_summary(const pv_scenario* scenario) {
  return scenario ? scenario->result.summary.c_str() : "";
}

const char* pv_scenario_echo(const pv_scenario* scenario) {
  if (!scenario) return "";
  scenario->echo = panvein::echo_config(scenario->config);
  return scenario->echo.c_str();
}

size_t pv_scenario_manifest_size(const pv_scenario* scenario) {
  return scenario ? scenario->result.manifest.size() : 0;
}

pv_status pv_scenario_manifest_entry(const pv_scenario* scenario, size_t index, const char** file,
                                     const char** sha256) {
  return guarded([&] {
    require(scenario, "scenario");
    if (index >= scenario->result.manifest.size()) {
      throw panvein::Error(panvein::ErrorCode::InvalidArgument, "manifest index out of range");
    }
    const auto& e = scenario->result.manifest[index];
    if (file) *file = e.file.c_str();
    if (sha256) *sha256 = e.sha256.c_str();
  });
}

size_t pv_scenario_timing_size(const pv_scenario* scenario) {
  return scenario ? scenario->result.timing.size() : 0;
}

pv_status pv_scenario_timing_entry(const pv_scenario* scenario, size_t index, const char** stage,
                                   double* seconds) {
  return guarded([&] {
    require(scenario, "scenario");
    if (index >= scenario->result.timing.size()) {
      throw panvein::Error(panvein::ErrorCode::InvalidArgument, "timing index out of range");
    }
    const auto& e = scenario->result.timing[index];
    if (stage) *stage = e.first.c_str();
    if (seconds) *seconds = e.second;
  });
}

void pv_scenario_free(pv_scenario* scenario) { delete scenario; }

}  // extern "C"
