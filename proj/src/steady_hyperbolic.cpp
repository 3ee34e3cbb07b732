#include "panvein/steady_hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace panvein {

const char* to_string(SteadyMethod method) noexcept {
  switch (method) {
    case SteadyMethod::Shooting: return "shooting";
    case SteadyMethod::Picard: return "picard";
    case SteadyMethod::Collocation: return "collocation";
    case SteadyMethod::BlockIteration: return "block-iteration";
  }
  return "unknown";
}

namespace {

void check_grid(const ModelParams& p, const Grid& grid) {
  if (std::abs(grid.length() - p.L) > 1e-12 * p.L) {
    std::ostringstream msg;
    msg << "grid length " << grid.length() << " does not match L = " << p.L;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

void fill_residuals(SteadyProfile& prof, const ModelParams& p) {
  prof.residual_G = std::abs(prof.G.back() - p.alpha1 * prof.G.front());
  prof.residual_I = std::abs(prof.I.back() - p.alpha2 * prof.I.front());
}

void require_positive(const SteadyProfile& prof, const char* who) {
  for (std::size_t j = 0; j < prof.G.size(); ++j) {
    if (!(prof.G[j] > 0.0) || !(prof.I[j] > 0.0)) {
      std::ostringstream msg;
      msg << who << ": converged to a non-positive profile at x = "
          << prof.grid[static_cast<int>(j)];
      throw NonConvergenceError(msg.str(), std::max(prof.residual_G, prof.residual_I));
    }
  }
}

Mat2 checked_inverse(const Mat2& m, const char* who) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (!(std::abs(m.determinant()) > 1e-14 * scale * scale)) {
    throw Error(ErrorCode::Singular, std::string(who) + ": D - e^{BL/c} is singular");
  }
  return m.inverse();
}

}  // namespace

SteadyProfile march_profile(const Vec2& u0, const SteadyRhs& rhs, const Grid& grid) {
  SteadyProfile prof;
  prof.grid = grid;
  const auto n = static_cast<std::size_t>(grid.size());
  prof.G.resize(n);
  prof.I.resize(n);
  const double h = grid.spacing();
  Vec2 u = u0;
  prof.G[0] = u[0];
  prof.I[0] = u[1];
  for (int j = 0; j < grid.cells(); ++j) {
    u = rk4_step(rhs, grid[j], u, h);
    prof.G[static_cast<std::size_t>(j) + 1] = u[0];
    prof.I[static_cast<std::size_t>(j) + 1] = u[1];
  }
  return prof;
}

SteadyRhs steady_rhs(const ModelParams& p, const SigmaProfile& sigma) {
  const double inv_c = 1.0 / p.c;
  return [p, sigma, inv_c](double x, const Vec2& u) -> Vec2 {
    return reaction_rhs(u[0], u[1], sigma(std::min(x, sigma.length())), p) * inv_c;
  };
}

SteadyProfile integrate_ivp(double G0, double I0, const ModelParams& p, const SigmaProfile& sigma,
                            const Grid& grid) {
  if (!(G0 > 0.0) || !(I0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_ivp: initial values must be positive");
  }
  check_grid(p, grid);
  SteadyProfile prof = march_profile({G0, I0}, steady_rhs(p, sigma), grid);
  fill_residuals(prof, p);
  return prof;
}

Vec2 default_shooting_guess(const ModelParams& p, const SigmaProfile& sigma) {
  constexpr int kSamples = 101;
  double mean_sigma = 0.0;
  for (int i = 0; i < kSamples; ++i) mean_sigma += sigma(sigma.length() * i / (kSamples - 1));
  mean_sigma /= kSamples;

  // Net change over one transit equals transit time times the mean source,
  // with the insulin level taken as the average of its two ends.
  const double transit = p.transit();
  const double spread = 0.5 * (1.0 + p.alpha2);
  double G0 = find_equilibrium(p, mean_sigma).G_star;
  double I0 = 0.0;
  for (int round = 0; round < 20; ++round) {
    const double saturation = G0 * G0 / (p.b * p.b + G0 * G0);
    I0 = mean_sigma * saturation * transit / ((p.alpha2 - 1.0) + p.d_i * transit * spread);
    G0 = p.G_in * transit / ((p.alpha1 - 1.0) + p.a * I0 * spread * transit);
  }
  return {G0, I0};
}

SteadyProfile solve_shooting(const ModelParams& p, const SigmaProfile& sigma, const Grid& grid,
                             const ShootingOptions& options) {
  p.validate();
  check_grid(p, grid);
  const Vec2 guess = options.guess.value_or(default_shooting_guess(p, sigma));
  if (!(guess[0] > 0.0) || !(guess[1] > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solve_shooting: guess must be positive");
  }
  const SteadyRhs rhs = steady_rhs(p, sigma);
  const Mat2 D = p.boundary_matrix();
  auto residual = [&](const VecX& z) -> VecX {
    const Vec2 u0(z[0], z[1]);
    try {
      const SteadyProfile prof = march_profile(u0, rhs, grid);
      return prof.back() - D * u0;
    } catch (const IntegrationError&) {
      return VecX::Constant(2, std::numeric_limits<double>::quiet_NaN());
    }
  };
  NewtonOptions nopt;
  nopt.tol = options.tol;
  nopt.max_iter = options.max_iter;
  NewtonResult res;
  try {
    res = newton_nd(residual, VecX(guess), nopt);
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(std::string(e.what()) +
                                  "; try the Picard solver (constant sigma) or continuation in L",
                              e.last_residual());
  }
  SteadyProfile prof = march_profile({res.x[0], res.x[1]}, rhs, grid);
  prof.iterations = res.iterations;
  prof.method = SteadyMethod::Shooting;
  fill_residuals(prof, p);
  require_positive(prof, "solve_shooting");
  return prof;
}

std::vector<Vec2> picard_linear_part(const EquilibriumReport& eq, const Grid& grid) {
  const auto& p = eq.params;
  const Mat2 A = eq.B / p.c;
  const Mat2 D = p.boundary_matrix();
  const Mat2 inv = checked_inverse(D - mat_exp<2>(A, p.L), "picard_linear_part");
  const Vec2 shift = inv * (Mat2::Identity() - D) * eq.u_star();
  std::vector<Vec2> u0(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) {
    u0[static_cast<std::size_t>(j)] = eq.u_star() + mat_exp<2>(A, grid[j]) * shift;
  }
  return u0;
}

SteadyProfile solve_picard(const ModelParams& p, double sigma_const, const Grid& grid,
                           const PicardOptions& options) {
  p.validate();
  check_grid(p, grid);
  const EquilibriumReport eq = find_equilibrium(p, sigma_const);
  const Mat2 A = eq.B / p.c;
  const Mat2 D = p.boundary_matrix();
  const Mat2 inv = checked_inverse(D - mat_exp<2>(A, p.L), "solve_picard");
  const auto n = static_cast<std::size_t>(grid.size());
  std::vector<Mat2> prop(n);
  for (std::size_t j = 0; j < n; ++j) prop[j] = mat_exp<2>(A, grid[static_cast<int>(j)]) * inv;
  const std::vector<Vec2> u0 = picard_linear_part(eq, grid);
  const double h = grid.spacing();
  const double inv_c = 1.0 / p.c;

  std::vector<Vec2> u = u0;
  std::vector<Vec2> forcing(n);
  int iterations = 0;
  if (!options.linear_only) {
    double last_change = std::numeric_limits<double>::infinity();
    int growths = 0;
    bool converged = false;
    for (int it = 1; it <= options.max_iter; ++it) {
      for (std::size_t j = 0; j < n; ++j) forcing[j] = remainder_F(u[j][0], u[j][1], eq) * inv_c;
      const std::vector<Vec2> conv = mat_convolve_forward(A, forcing, h);
      double change = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const Vec2 next = u0[j] + conv[j] + prop[j] * conv.back();
        change = std::max(change, (next - u[j]).cwiseAbs().maxCoeff());
        u[j] = next;
      }
      iterations = it;
      if (!std::isfinite(change) || (change > last_change && ++growths >= 5)) {
        const ContractionCertificate cert = contraction_certificate(p, sigma_const, grid);
        std::ostringstream msg;
        msg << "solve_picard: iterates diverge (update " << change << " after " << it
            << " iterations); contraction factor " << cert.factor
            << (cert.valid ? " (certificate valid)" : " > 1, certificate invalid");
        throw Error(ErrorCode::Divergence, msg.str());
      }
      if (change <= last_change) growths = 0;
      last_change = change;
      if (change <= options.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NonConvergenceError("solve_picard: no convergence within " +
                                    std::to_string(options.max_iter) + " iterations",
                                last_change);
    }
  }

  SteadyProfile prof;
  prof.grid = grid;
  prof.G.resize(n);
  prof.I.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    prof.G[j] = u[j][0];
    prof.I[j] = u[j][1];
  }
  prof.iterations = iterations;
  prof.method = SteadyMethod::Picard;
  fill_residuals(prof, p);
  if (!options.linear_only) require_positive(prof, "solve_picard");
  return prof;
}

CompatibilityResiduals compatibility_residuals(const SteadyProfile& profile, const ModelParams& p,
                                               const SigmaProfile& sigma) {
  const Grid& grid = profile.grid;
  const double h = grid.spacing();
  const auto n = profile.G.size();
  const double L = grid.length();

  std::vector<double> uptake = cumulative_trapz(profile.I, h);
  for (double& v : uptake) v *= p.a / p.c;
  const double total = uptake.back();

  std::vector<double> kernel_G(n);
  std::vector<double> kernel_I(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid[static_cast<int>(j)];
    const double G = profile.G[j];
    kernel_G[j] = std::exp(-(total - uptake[j]));
    kernel_I[j] = std::exp(-p.d_i * (L - x) / p.c) * sigma(x) * G * G / (p.b * p.b + G * G);
  }
  const double source_G = p.G_in / p.c * quad_trapz(kernel_G, h);
  const double source_I = quad_trapz(kernel_I, h) / p.c;
  const double G0 = profile.G.front();
  const double I0 = profile.I.front();
  const double decay_I = std::exp(-p.d_i * L / p.c);

  CompatibilityResiduals out;
  out.res_G = std::abs(G0 * (p.alpha1 - std::exp(-total)) - source_G);
  out.res_G_growing = std::abs(G0 * (p.alpha1 - std::exp(total)) - source_G);
  out.res_I = std::abs(I0 * (p.alpha2 - decay_I) - source_I);
  out.res_I_alpha1 = std::abs(I0 * (p.alpha1 - decay_I) - source_I);
  return out;
}

ContractionCertificate contraction_certificate(const ModelParams& p, double sigma_const,
                                               const Grid& grid) {
  p.validate();
  check_grid(p, grid);
  const EquilibriumReport eq = find_equilibrium(p, sigma_const);
  const Mat2 A = eq.B / p.c;
  const Mat2 D = p.boundary_matrix();
  const Mat2 inv = checked_inverse(D - mat_exp<2>(A, p.L), "contraction_certificate");

  ContractionCertificate cert;
  const Vec2 shift = inv * (Mat2::Identity() - D) * eq.u_star();
  for (int j = 0; j < grid.size(); ++j) {
    cert.xi0_norm =
        std::max(cert.xi0_norm, (mat_exp<2>(A, grid[j]) * shift).cwiseAbs().maxCoeff());
  }
  cert.k = nonlinearity_constant(eq);
  cert.inverse_norm = norm2(inv);
  const double gain = p.transit() * cert.k * (cert.inverse_norm + 1.0);
  cert.factor = 4.0 * cert.xi0_norm * gain;
  cert.valid = cert.factor <= 1.0;
  if (cert.valid) {
    cert.r = 0.5 * (1.0 - std::sqrt(1.0 - cert.factor));
    cert.r_scaled = cert.r / gain;
  }
  return cert;
}

double uniqueness_bound(const ModelParams& p, double sigma_sup, double eps_u) {
  if (!(sigma_sup > 0.0)) return std::numeric_limits<double>::infinity();
  const double G0 = find_equilibrium(p, sigma_sup).G_star;
  const double b2 = p.b * p.b;
  const double first = eps_u / (2.0 * std::sqrt(G0 * sigma_sup * b2 * p.L * p.L));
  const double second = eps_u / (2.0 * std::cbrt(p.G_in * sigma_sup * b2));
  return std::max(first, second);
}

double uniqueness_bound(const ModelParams& p, const SigmaProfile& sigma, double eps_u) {
  return uniqueness_bound(p, sigma.sup(), eps_u);
}

}  // namespace panvein
