#pragma once

// Small dense linear algebra, quadrature and ODE kernels shared by the
// solver modules. Everything here is a pure function of its inputs.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "panvein/error.hpp"

namespace panvein {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;

/// Uniform grid 0 = x_0 < ... < x_N = L with h = L/N.
class Grid {
 public:
  Grid(double length, int cells);

  /// Grid with `nodes` points (cells = nodes - 1).
  static Grid with_nodes(double length, int nodes) { return Grid(length, nodes - 1); }

  int cells() const noexcept { return cells_; }
  int size() const noexcept { return cells_ + 1; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / cells_; }
  double operator[](int j) const noexcept {
    return j == cells_ ? length_ : length_ * static_cast<double>(j) / cells_;
  }
  std::vector<double> nodes() const;

 private:
  double length_;
  int cells_;
};

namespace detail {

template <typename M>
bool all_finite(const M& m) {
  return m.allFinite();
}

}  // namespace detail

/// e^{A t} via Eigen's Pade scaling and squaring.
template <int N>
Eigen::Matrix<double, N, N> mat_exp(const Eigen::Matrix<double, N, N>& a, double t) {
  if (!std::isfinite(t) || !detail::all_finite(a)) {
    throw Error(ErrorCode::InvalidArgument, "mat_exp: non-finite input");
  }
  const Eigen::Matrix<double, N, N> x = a * t;
  return x.exp();
}

/// Largest singular value of a 2x2 matrix.
double norm2(const Mat2& m);

/// One classical Runge-Kutta step of u' = f(x, u).
template <typename Vec, typename F>
Vec rk4_step(const F& f, double x, const Vec& u, double h) {
  if (!(h > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rk4_step: step must be positive");
  }
  const Vec k1 = f(x, u);
  const Vec k2 = f(x + 0.5 * h, Vec(u + 0.5 * h * k1));
  const Vec k3 = f(x + 0.5 * h, Vec(u + 0.5 * h * k2));
  const Vec k4 = f(x + h, Vec(u + h * k3));
  Vec next = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!detail::all_finite(next)) {
    throw IntegrationError(ErrorCode::IntegrationFailure,
                           "rk4_step: non-finite state near x = " + std::to_string(x), x);
  }
  return next;
}

/// Composite trapezoid rule over equally spaced samples.
double quad_trapz(std::span<const double> values, double h);

/// Running trapezoid integral: out[j] = integral from node 0 to node j.
std::vector<double> cumulative_trapz(std::span<const double> values, double h);

struct RootOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

/// Root of g in [lo, hi] given a sign change. Returns x with |g(x)| <= tol
/// or a final bracket no wider than tol.
double find_root_bracketed(const std::function<double(double)>& g, double lo, double hi,
                           RootOptions options = {});

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int max_halvings = 20;
};

struct NewtonResult {
  VecX x;
  int iterations = 0;
  double residual = 0.0;  ///< ||R(x)||_inf at return
};

/// Damped Newton with a central finite-difference Jacobian
/// (step 1e-6 * max(1, |x_i|)).
NewtonResult newton_nd(const std::function<VecX(const VecX&)>& residual, const VecX& x0,
                       NewtonOptions options = {});

/// Exact cell weights for integrating e^{-k s} against a linear function on
/// [0, h]: w0 = int e^{-k s} ds, w1 = int e^{-k s} (s/h) ds. Stable for any
/// sign and magnitude of k h that keeps e^{-k h} finite.
struct ExpCellWeights {
  double w0;
  double w1;
};
ExpCellWeights exp_cell_weights(double k, double h);

/// One cell of the matrix analogue: step = e^{Ah}, w0 = int_0^h e^{As} ds,
/// w1 = int_0^h e^{As} (s/h) ds, read off a single 6x6 exponential.
struct MatCellWeights {
  Mat2 step;
  Mat2 w0;
  Mat2 w1;
};
MatCellWeights mat_cell_weights(const Mat2& a, double h);

/// out[j] = int_0^{x_j} e^{A(x_j - y)} g(y) dy with g linear between nodes.
std::vector<Vec2> mat_convolve_forward(const Mat2& a, std::span<const Vec2> g, double h);

/// Causal exponential convolution on a uniform grid,
/// out[j] = int_0^{x_j} e^{mu (x_j - y)} g(y) dy, with g interpolated
/// linearly between nodes (exact for piecewise-linear g). Requires mu h
/// small enough for e^{mu h} to be finite; intended for mu <= O(1).
std::vector<double> exp_convolve_forward(double mu, std::span<const double> g, double h);

/// Anti-causal counterpart, out[j] = int_{x_j}^{L} e^{-kappa (y - x_j)} g(y) dy,
/// for kappa >= 0 of any size.
std::vector<double> exp_convolve_backward(double kappa, std::span<const double> g, double h);

}  // namespace panvein
