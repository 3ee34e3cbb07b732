#pragma once

// Steady states with small diffusion: -eps u'' + c u' = f(u) with
// u(L) = D u(0) and u'(L) = u'(0), and the modal block machinery that
// compares them with the eps = 0 problem.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "panvein/steady_hyperbolic.hpp"

namespace panvein {

struct EpsSteadyProfile {
  Grid grid{1.0, 2};
  std::vector<double> G, I;
  std::vector<double> Gp, Ip;  ///< first derivatives per node
  /// |G(L)-a1 G(0)|, |I(L)-a2 I(0)|, |G'(L)-G'(0)|, |I'(L)-I'(0)|
  std::array<double, 4> residuals{};
  double eps = 0.0;
  int iterations = 0;
  SteadyMethod method = SteadyMethod::Collocation;

  SteadyProfile as_steady() const;
};

/// Roots of eps m^2 - c m + Lambda = 0 for one eigenvalue Lambda of B:
/// the slow root mu0 = Lambda/c + O(eps) and the fast root mu_e ~ c/eps.
struct ModalRoots {
  double lambda = 0.0;
  double mu0 = 0.0;
  double mue = 0.0;
};
ModalRoots modal_roots(double lambda, double c, double eps);

/// Tabulated blocks of the exponential of the augmented first-order system
/// [[0, I], [-B/eps, (c/eps) I]] and the linear solution operator Phi with
/// u'(L) = u'(0).
class BlockSet {
 public:
  BlockSet(double eps, const EquilibriumReport& eq, const Grid& grid);

  double eps() const noexcept { return eps_; }
  const Grid& grid() const noexcept { return grid_; }
  const Mat2& P() const noexcept { return P_; }
  const Mat2& P_inv() const noexcept { return P_inv_; }
  const std::array<ModalRoots, 2>& modes() const noexcept { return modes_; }

  /// Blocks at an arbitrary x; entries overflow for x c/eps beyond ~700.
  Mat4 exp_augmented(double x) const;
  Mat2 D11(double x) const { return exp_augmented(x).block<2, 2>(0, 0); }
  Mat2 D12(double x) const { return exp_augmented(x).block<2, 2>(0, 2); }
  Mat2 D21(double x) const { return exp_augmented(x).block<2, 2>(2, 0); }
  Mat2 D22(double x) const { return exp_augmented(x).block<2, 2>(2, 2); }

  /// Phi(x) = D11(x) + D12(x) (I - D22(L))^{-1} D21(L), in overflow-free form.
  Mat2 Phi(double x) const;
  Mat2 Phi_prime(double x) const;
  /// Modal factor of Phi for mode i.
  double phi_mode(int i, double x) const;
  double phi_mode_prime(int i, double x) const;

  /// End matrix used in (D - E(L))^{-1}; taken as Phi(L).
  Mat2 E_L() const { return Phi(grid_.length()); }

  /// Tabulations on the grid.
  const std::vector<Mat2>& phi_table() const noexcept { return phi_; }
  std::vector<Mat4> block_table() const;

 private:
  double eps_;
  double c_;
  Grid grid_;
  Mat2 P_, P_inv_;
  std::array<ModalRoots, 2> modes_{};
  std::array<double, 2> r_{}, rm_{}, den_{};
  std::vector<Mat2> phi_;
};

inline BlockSet build_blocks(double eps, const EquilibriumReport& eq, const Grid& grid) {
  return BlockSet(eps, eq, grid);
}

/// Max over the grid of |D21 - D11'| and |D22 - D12'| relative to the block
/// size, derivatives by central differences of step `step`.
double block_derivative_defect(const BlockSet& blocks, double step = 1e-5, double x_max = -1.0);

/// [Sg](x): solution of -eps w'' + c w' = B w + g with w(0) = 0 and
/// w'(L) = w'(0), for g given per node in physical coordinates. Optional
/// derivative output.
std::vector<Vec2> forced_response(const BlockSet& blocks, const std::vector<Vec2>& g,
                                  std::vector<Vec2>* derivative = nullptr);

/// int_0^x e^{B(x-y)/c} g(y)/c dy: the eps = 0 counterpart.
std::vector<Vec2> forced_response_hyperbolic(const EquilibriumReport& eq, const Grid& grid,
                                             const std::vector<Vec2>& g);

struct SingularTermCheck {
  double max_difference = 0.0;  ///< between the naive and reduced forms
  double max_magnitude = 0.0;
};

/// Assembles the two fast-mode terms of [Sg] once directly from the block
/// entries and once from the reduced overflow-free expression. Needs eps
/// large enough for e^{c L/eps} to be representable.
SingularTermCheck singular_term_check(const BlockSet& blocks, const std::vector<Vec2>& g);

struct GapTable {
  std::vector<double> eps;
  std::vector<double> gap;
  double slope = 0.0;  ///< least-squares log-log fit
  std::vector<double> bound_ratio;  ///< gap over the four-term estimate (forced case)
};

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// max_x |Phi(x) u0 - e^{Bx/c} u0|_2 / |u0|_2 per eps.
GapTable perturbation_gap_linear(const std::vector<double>& eps_list, const EquilibriumReport& eq,
                                 const Grid& grid, const Vec2& u0);

/// max_x |[Sg](x) - int_0^x e^{B(x-y)/c} g/c dy| per eps.
GapTable perturbation_gap_forced(const std::vector<double>& eps_list, const EquilibriumReport& eq,
                                 const Grid& grid, const std::function<Vec2(double)>& g);

struct CollocationOptions {
  double tol = 1e-10;  ///< Newton step relative to max |U|
  int max_iter = 50;
  std::optional<SteadyProfile> initial;  ///< eps = 0 profile; solved by shooting if absent
};

/// Newton on a second-order finite-difference discretization, on a mesh
/// graded toward x = L; values returned at the uniform grid nodes.
EpsSteadyProfile solve_eps_collocation(const ModelParams& p, const SigmaProfile& sigma, double eps,
                                       const Grid& grid, const CollocationOptions& options = {});

/// Nodes of the graded mesh used by the collocation solver.
std::vector<double> graded_mesh(const Grid& grid, double eps, double c);

struct BlockOptions {
  double tol = 1e-10;
  int max_iter = 2000;
  bool linear_only = false;
};

/// Fixed-point iteration U = u* + Phi (D - E(L))^{-1} [(I - D) u* + S(L)] + S(x)
/// with S = [S F(U)]. Constant sigma.
EpsSteadyProfile solve_eps_block(const ModelParams& p, double sigma_const, double eps,
                                 const Grid& grid, const BlockOptions& options = {});

/// Same hypothesis and radius as the eps = 0 certificate with Phi in place
/// of e^{Bx/c}.
ContractionCertificate eps_contraction_certificate(const ModelParams& p, double sigma_const,
                                                   double eps, const Grid& grid);

enum class EpsSolver { Block, Collocation };

struct EpsSweepEntry {
  double eps = 0.0;
  double gap = 0.0;  ///< ||U_eps - u_bar||_inf
  double max_slope = 0.0;  ///< max |U_eps'| over the grid
  bool ok = false;
  std::string error;
};

struct EpsSweepTable {
  std::vector<EpsSweepEntry> entries;
  double order = 0.0;
  bool monotone = false;
};

EpsSweepTable eps_sweep(const ModelParams& p, double sigma_const, const std::vector<double>& eps_list,
                        const Grid& grid, EpsSolver solver = EpsSolver::Block, int workers = 1);

}  // namespace panvein
