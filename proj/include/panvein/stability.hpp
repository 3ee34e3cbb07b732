#pragma once

// Linear stability of a steady profile under the proportional boundary
// coupling, through the quadratic in Lambda = e^{-lambda L/c}.

#include <array>
#include <complex>
#include <vector>

#include "panvein/steady_hyperbolic.hpp"

namespace panvein {

enum class Verdict { Stable, Marginal, Unstable };

const char* to_string(Verdict v) noexcept;

/// Leading coefficient vanished; the quadratic collapsed to a line.
class DegenerateQuadraticError : public Error {
 public:
  DegenerateQuadraticError(const std::string& what, double root)
      : Error(ErrorCode::DegenerateQuadratic, what), root_(root) {}
  double root() const noexcept { return root_; }

 private:
  double root_;
};

/// B-bar at a state: the reaction Jacobian with sigma taken at the node.
Mat2 linearized_matrix(double G, double I, const ModelParams& p, double sigma_x);

struct TransferMatrices {
  Mat2 integrated;  ///< e^{int_0^L B-bar(y)/c dy}, trapezoid in y
  Mat2 product;     ///< ordered product of cell exponentials (midpoint B-bar)
  double gap = 0.0; ///< ||integrated - product||_2
};

TransferMatrices transfer_matrix(const SteadyProfile& profile, const ModelParams& p,
                                 const SigmaProfile& sigma);

using QuadRoots = std::array<std::complex<double>, 2>;

/// Roots of c0 + c1 L + c2 L^2 = 0 ordered by modulus.
QuadRoots quadratic_roots_from_coefficients(double c0, double c1, double c2);

/// Roots of alpha1 alpha2 - (alpha1 b22 + alpha2 b11) L + det(b) L^2 = 0.
QuadRoots quadratic_roots(const Mat2& b, double alpha1, double alpha2);

struct VerdictResult {
  Verdict verdict = Verdict::Marginal;
  double min_modulus = 0.0;
  double lead_re = 0.0;  ///< -ln(min |Lambda|) / L_eff [1/min]
};

VerdictResult verdict(const QuadRoots& roots, double L_eff, double margin = 1e-6);

/// lambda = -(ln|Lambda| + i (arg Lambda + 2 k pi))/L_eff for |k| <= k_max.
std::vector<std::complex<double>> eigenvalue_lattice(const QuadRoots& roots, double L_eff,
                                                     int k_max);

struct StabilityOptions {
  double margin = 1e-6;
  bool use_product = false;  ///< verdict from the ordered product instead
};

struct StabilityReport {
  Mat2 b_matrix = Mat2::Zero();
  Mat2 product_matrix = Mat2::Zero();
  double commutator_gap = 0.0;
  std::array<double, 3> quad_coeffs{};  ///< (alpha1 alpha2, -(alpha1 b22 + alpha2 b11), det b)
  QuadRoots roots{};
  double lead_re = 0.0;
  Verdict verdict = Verdict::Marginal;
  std::vector<std::complex<double>> lattice;
};

StabilityReport analyze_stability(const SteadyProfile& profile, const ModelParams& p,
                                  const SigmaProfile& sigma, const StabilityOptions& options = {});

}  // namespace panvein
