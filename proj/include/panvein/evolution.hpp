#pragma once

// Method-of-lines integrator for the time-dependent problem: first-order
// upwind transport, central diffusion, explicit Euler reaction.

#include <cstdint>
#include <vector>

#include "panvein/steady_hyperbolic.hpp"

namespace panvein {

struct EvolutionState {
  Grid grid{1.0, 2};
  double t = 0.0;   ///< [min]
  std::vector<double> G, I;
  double dt = 0.0;  ///< [min]
};

/// Switches for isolating parts of the operator in tests.
struct EvolutionTerms {
  bool advection = true;
  bool diffusion = true;
  bool reaction = true;
};

/// 0.9 min(h/c, h^2/(2 eps)) with the terms that are switched on; step()
/// refuses anything larger.
double cfl_limit(const Grid& grid, const ModelParams& p, const EvolutionTerms& terms = {});

/// 0.9 / (c/h + 2 eps/h^2): keeps every update coefficient non-negative when
/// transport and diffusion act together. Never exceeds cfl_limit.
double stable_time_step(const Grid& grid, const ModelParams& p, const EvolutionTerms& terms = {});

/// State at t = 0 with dt set to the stable step.
EvolutionState make_state(const Grid& grid, std::vector<double> G, std::vector<double> I,
                          const ModelParams& p, const EvolutionTerms& terms = {});

/// One explicit step. The inflow node is reset to u(L)/alpha afterwards;
/// with eps > 0 ghost nodes carry zero gradient at both ends.
EvolutionState step(const EvolutionState& state, const ModelParams& p, const SigmaProfile& sigma,
                    const EvolutionTerms& terms = {});

/// Max over nodes and components of |u - reference|.
double sup_distance(const EvolutionState& state, const SteadyProfile& reference);

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> distances;
  EvolutionState final_state;
  bool converged = false;  ///< distance reached tol before t_max
};

struct RunOptions {
  double t_max = 500.0;
  double tol = 1e-8;
  double sample_every = 1.0;  ///< [min]
  EvolutionTerms terms{};
};

EvolutionTrace run_to_steady(std::vector<double> G0, std::vector<double> I0, const ModelParams& p,
                             const SigmaProfile& sigma, const SteadyProfile& reference,
                             const RunOptions& options = {});

/// Exponential rate fitted to log(distance) over the final half of a trace.
double fit_decay_rate(const EvolutionTrace& trace);

/// True when the distance never increases over the final half of the trace.
bool non_increasing_tail(const EvolutionTrace& trace, double rel_slack = 1e-12);

struct ContractionReport {
  double max_ratio = 0.0;  ///< max over samples and t of |u(t)|_inf / |u(0)|_inf
  int samples = 0;
};

/// Linear transport-diffusion part only, from `samples` random fields.
ContractionReport semigroup_contraction_check(const ModelParams& p, const Grid& grid,
                                              const std::vector<double>& t_list,
                                              std::uint64_t seed = 1, int samples = 20);

}  // namespace panvein
