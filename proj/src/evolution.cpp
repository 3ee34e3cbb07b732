#include "panvein/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace panvein {

double cfl_limit(const Grid& grid, const ModelParams& p, const EvolutionTerms& terms) {
  const double h = grid.spacing();
  double limit = std::numeric_limits<double>::infinity();
  if (terms.advection) limit = std::min(limit, h / p.c);
  if (terms.diffusion && p.eps > 0.0) limit = std::min(limit, h * h / (2.0 * p.eps));
  if (!std::isfinite(limit)) limit = h;  // reaction only: resolve on the same scale
  return 0.9 * limit;
}

double stable_time_step(const Grid& grid, const ModelParams& p, const EvolutionTerms& terms) {
  const double h = grid.spacing();
  double rate = 0.0;
  if (terms.advection) rate += p.c / h;
  if (terms.diffusion && p.eps > 0.0) rate += 2.0 * p.eps / (h * h);
  if (rate == 0.0) return cfl_limit(grid, p, terms);
  return 0.9 / rate;
}

EvolutionState make_state(const Grid& grid, std::vector<double> G, std::vector<double> I,
                          const ModelParams& p, const EvolutionTerms& terms) {
  const auto n = static_cast<std::size_t>(grid.size());
  if (G.size() != n || I.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "make_state: initial data does not match the grid");
  }
  EvolutionState s;
  s.grid = grid;
  s.G = std::move(G);
  s.I = std::move(I);
  s.dt = stable_time_step(grid, p, terms);
  return s;
}

EvolutionState step(const EvolutionState& state, const ModelParams& p, const SigmaProfile& sigma,
                    const EvolutionTerms& terms) {
  const Grid& grid = state.grid;
  const double h = grid.spacing();
  const double dt = state.dt;
  const double limit = cfl_limit(grid, p, terms);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step: dt = " << dt << " violates the CFL bound " << limit;
    throw Error(ErrorCode::StepSize, msg.str());
  }
  const int N = grid.cells();
  const double courant = terms.advection ? p.c * dt / h : 0.0;
  const double mix = terms.diffusion ? p.eps * dt / (h * h) : 0.0;

  EvolutionState next = state;
  next.t = state.t + dt;
  for (int j = 1; j <= N; ++j) {
    const auto i = static_cast<std::size_t>(j);
    const std::size_t right = j < N ? i + 1 : i - 1;  // ghost mirror at x = L
    double g = state.G[i] - courant * (state.G[i] - state.G[i - 1]) +
               mix * (state.G[right] - 2.0 * state.G[i] + state.G[i - 1]);
    double v = state.I[i] - courant * (state.I[i] - state.I[i - 1]) +
               mix * (state.I[right] - 2.0 * state.I[i] + state.I[i - 1]);
    if (terms.reaction) {
      const Vec2 f = reaction_rhs(state.G[i], state.I[i], sigma(grid[j]), p);
      g += dt * f[0];
      v += dt * f[1];
    }
    next.G[i] = g;
    next.I[i] = v;
  }
  if (terms.advection) {
    next.G[0] = next.G[static_cast<std::size_t>(N)] / p.alpha1;
    next.I[0] = next.I[static_cast<std::size_t>(N)] / p.alpha2;
  } else {
    // No transport: the inflow node evolves like any other, reflected.
    double g = state.G[0] + mix * 2.0 * (state.G[1] - state.G[0]);
    double v = state.I[0] + mix * 2.0 * (state.I[1] - state.I[0]);
    if (terms.reaction) {
      const Vec2 f = reaction_rhs(state.G[0], state.I[0], sigma(0.0), p);
      g += dt * f[0];
      v += dt * f[1];
    }
    next.G[0] = g;
    next.I[0] = v;
  }
  for (std::size_t i = 0; i < next.G.size(); ++i) {
    if (!std::isfinite(next.G[i]) || !std::isfinite(next.I[i])) {
      std::ostringstream msg;
      msg << "step: non-finite state at t = " << next.t << " min";
      throw IntegrationError(ErrorCode::BlowUp, msg.str(), next.t);
    }
  }
  return next;
}

double sup_distance(const EvolutionState& state, const SteadyProfile& reference) {
  double d = 0.0;
  for (std::size_t i = 0; i < state.G.size(); ++i) {
    d = std::max({d, std::abs(state.G[i] - reference.G[i]), std::abs(state.I[i] - reference.I[i])});
  }
  return d;
}

EvolutionTrace run_to_steady(std::vector<double> G0, std::vector<double> I0, const ModelParams& p,
                             const SigmaProfile& sigma, const SteadyProfile& reference,
                             const RunOptions& options) {
  for (std::size_t i = 0; i < G0.size(); ++i) {
    if (!(G0[i] > 0.0) || !(I0[i] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "run_to_steady: initial data must be positive");
    }
  }
  EvolutionState s = make_state(reference.grid, std::move(G0), std::move(I0), p, options.terms);
  EvolutionTrace trace;
  double d = sup_distance(s, reference);
  trace.times.push_back(0.0);
  trace.distances.push_back(d);
  double next_sample = options.sample_every;
  while (d > options.tol && s.t < options.t_max) {
    const double remaining = options.t_max - s.t;
    const double full = stable_time_step(s.grid, p, options.terms);
    s.dt = std::min(full, remaining);
    if (s.dt <= 1e-12 * options.t_max) break;
    s = step(s, p, sigma, options.terms);
    d = sup_distance(s, reference);
    if (s.t >= next_sample - 1e-9 || d <= options.tol || s.t >= options.t_max - 1e-9) {
      trace.times.push_back(s.t);
      trace.distances.push_back(d);
      while (next_sample <= s.t + 1e-9) next_sample += options.sample_every;
    }
  }
  trace.converged = d <= options.tol;
  s.dt = stable_time_step(s.grid, p, options.terms);
  trace.final_state = std::move(s);
  return trace;
}

double fit_decay_rate(const EvolutionTrace& trace) {
  const std::size_t n = trace.times.size();
  if (n < 4) return std::nan("");
  const double t_half = 0.5 * trace.times.back();
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (trace.times[i] < t_half || !(trace.distances[i] > 0.0)) continue;
    const double y = std::log(trace.distances[i]);
    st += trace.times[i];
    sy += y;
    stt += trace.times[i] * trace.times[i];
    sty += trace.times[i] * y;
    ++m;
  }
  if (m < 2) return std::nan("");
  return -(m * sty - st * sy) / (m * stt - st * st);
}

bool non_increasing_tail(const EvolutionTrace& trace, double rel_slack) {
  const double t_half = 0.5 * trace.times.back();
  for (std::size_t i = 1; i < trace.times.size(); ++i) {
    if (trace.times[i - 1] < t_half) continue;
    if (trace.distances[i] > trace.distances[i - 1] * (1.0 + rel_slack)) return false;
  }
  return true;
}

ContractionReport semigroup_contraction_check(const ModelParams& p, const Grid& grid,
                                              const std::vector<double>& t_list,
                                              std::uint64_t seed, int samples) {
  EvolutionTerms terms;
  terms.reaction = false;
  const SigmaProfile sigma = SigmaProfile::homogeneous(1.0, grid.length());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> stops = t_list;
  std::sort(stops.begin(), stops.end());

  ContractionReport rep;
  rep.samples = samples;
  const auto n = static_cast<std::size_t>(grid.size());
  for (int s = 0; s < samples; ++s) {
    std::vector<double> G(n), I(n);
    for (std::size_t i = 0; i < n; ++i) {
      G[i] = unit(rng);
      I[i] = unit(rng);
    }
    // Start from a field that already honours the inflow coupling.
    G[0] = G[n - 1] / p.alpha1;
    I[0] = I[n - 1] / p.alpha2;
    EvolutionState st = make_state(grid, G, I, p, terms);
    auto sup = [](const EvolutionState& e) {
      double m = 0.0;
      for (std::size_t i = 0; i < e.G.size(); ++i) m = std::max({m, std::abs(e.G[i]), std::abs(e.I[i])});
      return m;
    };
    const double start = sup(st);
    for (double stop : stops) {
      while (st.t < stop - 1e-12) {
        st.dt = std::min(stable_time_step(grid, p, terms), stop - st.t);
        st = step(st, p, sigma, terms);
      }
      rep.max_ratio = std::max(rep.max_ratio, sup(st) / start);
    }
  }
  return rep;
}

}  // namespace panvein
