#pragma once

// Model parameters, the secretion-capacity profile sigma(x), the reaction
// terms and the spatially homogeneous equilibrium.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "panvein/numerics.hpp"

namespace panvein {

/// Scalar parameters of the convection-diffusion-reaction model. Defaults
/// are the physiological reference values (hyperglycemic mean velocity).
struct ModelParams {
  double c = 4.2;        ///< blood speed [cm/min]
  double eps = 0.0;      ///< diffusion rate [cm^2/min]
  double L = 15.0;       ///< vein length [cm]
  double G_in = 0.06;    ///< peripheral glucose input [mM/min]
  double a = 1e-5;       ///< insulin sensitivity [1/(pM min)]
  double b = 9.0;        ///< half-saturation [mM]
  double d_i = 0.04;     ///< insulin degradation [1/min]
  double alpha1 = 1.0;   ///< glucose boundary proportionality
  double alpha2 = 2.0;   ///< insulin boundary proportionality

  /// Throws Error(Validation) naming the offending field.
  void validate() const;

  /// Transit length L/c [min]; the spatial variable after rescaling to unit speed.
  double transit() const noexcept { return L / c; }

  Mat2 boundary_matrix() const {
    Mat2 d = Mat2::Zero();
    d(0, 0) = alpha1;
    d(1, 1) = alpha2;
    return d;
  }

  bool operator==(const ModelParams&) const = default;
};

enum class SigmaKind {
  Homogeneous,
  LinearIncreasing,
  LinearDecreasing,
  Quadratic,          ///< concave upward
  ReversedQuadratic,  ///< concave downward
  Custom,
};

const char* to_string(SigmaKind kind) noexcept;
/// Accepts the config spellings ("linear-increasing", ...). Throws Validation.
SigmaKind sigma_kind_from_string(const std::string& name);

/// Spatial secretion capacity sigma(x) > 0 on [0, L].
class SigmaProfile {
 public:
  static SigmaProfile homogeneous(double base, double length);
  static SigmaProfile linear(double end0, double endL, double length);
  /// Parabola through (0, end0), (L/2, vertex), (L, endL).
  static SigmaProfile quadratic(double end0, double vertex, double endL, double length);
  /// Piecewise-linear through (x, sigma) samples spanning [0, L] exactly.
  static SigmaProfile custom(std::vector<std::pair<double, double>> samples);

  /// The five catalog shapes around a base level: homogeneous, linear
  /// increasing (base/2 -> 3base/2), linear decreasing, quadratic
  /// (ends 3base/2, middle base/2) and reversed quadratic.
  static std::vector<std::pair<std::string, SigmaProfile>> catalog(double base, double length);

  SigmaKind kind() const noexcept { return kind_; }
  double length() const noexcept { return length_; }
  double end0() const noexcept { return end0_; }
  double endL() const noexcept { return endL_; }
  double vertex() const noexcept { return vertex_; }
  const std::vector<std::pair<double, double>>& samples() const noexcept { return samples_; }

  bool is_constant() const noexcept { return kind_ == SigmaKind::Homogeneous; }
  /// Constant level; throws Error(Mode) for non-homogeneous profiles.
  double constant_value() const;

  double sup() const noexcept { return sup_; }
  double inf() const noexcept { return inf_; }

  /// sigma(x). Throws Error(Domain) outside [0, L].
  double operator()(double x) const;

  /// Same profile stretched or compressed onto a new length.
  SigmaProfile rescaled(double length) const;

 private:
  SigmaProfile() = default;
  double eval_unchecked(double x) const noexcept;
  void finish();

  SigmaKind kind_ = SigmaKind::Homogeneous;
  double length_ = 0.0;
  double end0_ = 0.0;
  double endL_ = 0.0;
  double vertex_ = 0.0;
  std::vector<std::pair<double, double>> samples_;
  double sup_ = 0.0;
  double inf_ = 0.0;
};

/// sigma(x) with the validity checks of the profile.
double sigma_eval(const SigmaProfile& profile, double x);

/// (G_in - a G I, sigma(x) G^2/(b^2+G^2) - d_i I).
Vec2 reaction_rhs(double G, double I, double sigma_x, const ModelParams& p) noexcept;
Vec2 reaction_rhs(double G, double I, double x, const ModelParams& p, const SigmaProfile& sigma);

/// Jacobian of reaction_rhs with respect to (G, I).
Mat2 reaction_jacobian(double G, double I, double sigma_x, const ModelParams& p) noexcept;

struct EquilibriumBounds {
  double G_lower;  ///< G_in d_i / (a sigma)
  double G_upper;  ///< max(2 G_in d_i / (a sigma), b)
  double I_upper;  ///< sigma / d_i
};

struct EquilibriumReport {
  ModelParams params;
  double sigma = 0.0;
  double G_star = 0.0;  ///< [mM]
  double I_star = 0.0;  ///< [pM]
  Mat2 B = Mat2::Zero();
  std::complex<double> lambda1;  ///< larger real part
  std::complex<double> lambda2;
  double M = 1.0;    ///< envelope constant
  double rho = 0.0;  ///< envelope decay rate [1/min]
  EquilibriumBounds bounds{};

  Vec2 u_star() const { return {G_star, I_star}; }
};

/// Unique equilibrium of the homogeneous reaction system for constant sigma,
/// its Jacobian, eigenvalues and a decay envelope ||e^{Bx}||_2 <= M e^{-rho x}.
EquilibriumReport find_equilibrium(const ModelParams& p, double sigma_const);

/// Eigenvalues of B from the closed form of the characteristic equation
/// (lambda + a I*)(lambda + d_i) + 2 a d_i^2 b^2 I*^2 / (sigma G*^2) = 0.
std::pair<std::complex<double>, std::complex<double>> equilibrium_eigenvalues(
    const ModelParams& p, double sigma, double G_star, double I_star);

/// Quadratic remainder F(u) = f(u) - B (u - u*). Constant sigma only.
Vec2 remainder_F(double G, double I, const EquilibriumReport& eq);
Vec2 remainder_F(double G, double I, const EquilibriumReport& eq, const SigmaProfile& sigma);

/// k = a + sigma b^2 / (b^2 + G*^2)^2, the constant used by the contraction
/// certificates.
double nonlinearity_constant(const EquilibriumReport& eq);

/// max |1 - (G + G*)^2 / (b^2 + G^2)| over |G - G*| <= radius, G >= 0.
double remainder_growth_factor(const EquilibriumReport& eq, double radius);

}  // namespace panvein
