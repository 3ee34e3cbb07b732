#pragma once

// Steady states without diffusion: c u' = f(u) on [0, L] with u(L) = D u(0).

#include <functional>
#include <optional>
#include <vector>

#include "panvein/model.hpp"

namespace panvein {

enum class SteadyMethod { Shooting, Picard, Collocation, BlockIteration };

const char* to_string(SteadyMethod method) noexcept;

struct SteadyProfile {
  Grid grid{1.0, 2};
  std::vector<double> G;  ///< [mM] per node
  std::vector<double> I;  ///< [pM] per node
  double residual_G = 0.0;  ///< |G(L) - alpha1 G(0)|
  double residual_I = 0.0;  ///< |I(L) - alpha2 I(0)|
  int iterations = 0;
  SteadyMethod method = SteadyMethod::Shooting;

  Vec2 at(int j) const { return {G[static_cast<std::size_t>(j)], I[static_cast<std::size_t>(j)]}; }
  Vec2 front() const { return at(0); }
  Vec2 back() const { return at(grid.cells()); }
};

/// Right-hand side of u' = rhs(x, u) in physical x (already divided by c).
using SteadyRhs = std::function<Vec2(double x, const Vec2& u)>;

/// RK4 march of u' = rhs from u(0) = u0 across the grid.
SteadyProfile march_profile(const Vec2& u0, const SteadyRhs& rhs, const Grid& grid);

/// The steady ODEs G' = (G_in - aGI)/c, I' = (sigma(x)G^2/(b^2+G^2) - d_i I)/c.
SteadyRhs steady_rhs(const ModelParams& p, const SigmaProfile& sigma);

/// March from (G0, I0); boundary residuals are filled but not enforced.
SteadyProfile integrate_ivp(double G0, double I0, const ModelParams& p, const SigmaProfile& sigma,
                            const Grid& grid);

/// Starting point for shooting built from transport balances over one transit.
Vec2 default_shooting_guess(const ModelParams& p, const SigmaProfile& sigma);

struct ShootingOptions {
  double tol = 1e-9;  ///< on |G(L) - alpha1 G0| and |I(L) - alpha2 I0|
  int max_iter = 200;
  std::optional<Vec2> guess;
};

SteadyProfile solve_shooting(const ModelParams& p, const SigmaProfile& sigma, const Grid& grid,
                             const ShootingOptions& options = {});

struct PicardOptions {
  double tol = 1e-10;  ///< on successive iterates in the sup norm
  int max_iter = 2000;
  bool linear_only = false;  ///< drop the remainder F (returns u0)
};

/// Fixed point of the variation-of-constants operator around u*. Constant
/// sigma only.
SteadyProfile solve_picard(const ModelParams& p, double sigma_const, const Grid& grid,
                           const PicardOptions& options = {});

/// u0(x) = u* + e^{Bx/c} (D - e^{BL/c})^{-1} (I - D) u*, tabulated on the grid.
std::vector<Vec2> picard_linear_part(const EquilibriumReport& eq, const Grid& grid);

struct CompatibilityResiduals {
  double res_G = 0.0;          ///< glucose identity, decaying exponent
  double res_I = 0.0;          ///< insulin identity with alpha2
  double res_G_growing = 0.0;  ///< glucose identity with e^{+int I}
  double res_I_alpha1 = 0.0;   ///< insulin identity with alpha1 in place of alpha2
};

/// Integral identities linking (G0, I0) to the profile; all four variants
/// are evaluated, absolute values returned.
CompatibilityResiduals compatibility_residuals(const SteadyProfile& profile, const ModelParams& p,
                                               const SigmaProfile& sigma);

struct ContractionCertificate {
  double xi0_norm = 0.0;  ///< sup over x of |e^{Bx/c} (D - e^{BL/c})^{-1} (I - D) u*|
  double k = 0.0;
  double inverse_norm = 0.0;  ///< ||(D - e^{BL/c})^{-1}||_2
  double factor = 0.0;        ///< 4 xi0 (L/c) k (inverse_norm + 1)
  double r = 0.0;             ///< (1 - sqrt(1 - factor)) / 2
  double r_scaled = 0.0;      ///< r / ((L/c) k (inverse_norm + 1))
  bool valid = false;
};

ContractionCertificate contraction_certificate(const ModelParams& p, double sigma_const,
                                               const Grid& grid);

/// Length threshold below which the steady problem has at most one positive
/// solution, for a discrepancy eps_u. Returns +inf when sup sigma is zero.
double uniqueness_bound(const ModelParams& p, double sigma_sup, double eps_u = 1e-3);
double uniqueness_bound(const ModelParams& p, const SigmaProfile& sigma, double eps_u = 1e-3);

}  // namespace panvein
