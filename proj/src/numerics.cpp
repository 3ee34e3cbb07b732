#include "panvein/numerics.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <sstream>

namespace panvein {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::ProfileValidity: return "profile-validity";
    case ErrorCode::Bracket: return "bracket";
    case ErrorCode::ParameterRegime: return "parameter-regime";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::IntegrationFailure: return "integration-failure";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::Conditioning: return "conditioning";
    case ErrorCode::Mode: return "mode";
    case ErrorCode::DegenerateQuadratic: return "degenerate-quadratic";
    case ErrorCode::StepSize: return "step-size";
    case ErrorCode::BlowUp: return "blow-up";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

Grid::Grid(double length, int cells) : length_(length), cells_(cells) {
  if (cells < 2) {
    throw Error(ErrorCode::InvalidArgument, "Grid: need at least 2 cells");
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw Error(ErrorCode::InvalidArgument, "Grid: length must be positive and finite");
  }
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(size()));
  for (int j = 0; j < size(); ++j) x[static_cast<std::size_t>(j)] = (*this)[j];
  return x;
}

double norm2(const Mat2& m) {
  const double fro2 = m.squaredNorm();
  const double det = m.determinant();
  const double disc = std::max(0.0, fro2 * fro2 - 4.0 * det * det);
  return std::sqrt(0.5 * (fro2 + std::sqrt(disc)));
}

double quad_trapz(std::span<const double> values, double h) {
  if (values.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "quad_trapz: need at least 2 samples");
  }
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t j = 1; j + 1 < values.size(); ++j) sum += values[j];
  return sum * h;
}

std::vector<double> cumulative_trapz(std::span<const double> values, double h) {
  if (values.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "cumulative_trapz: need at least 2 samples");
  }
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t j = 1; j < values.size(); ++j) {
    out[j] = out[j - 1] + 0.5 * h * (values[j - 1] + values[j]);
  }
  return out;
}

double find_root_bracketed(const std::function<double(double)>& g, double lo, double hi,
                           RootOptions options) {
  const double glo = g(lo);
  const double ghi = g(hi);
  if (std::abs(glo) <= options.tol) return lo;
  if (std::abs(ghi) <= options.tol) return hi;
  if (!(glo * ghi < 0.0)) {
    std::ostringstream msg;
    msg << "find_root_bracketed: no sign change on [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::Bracket, msg.str());
  }
  std::uintmax_t iters = static_cast<std::uintmax_t>(options.max_iter);
  const double tol = options.tol;
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, done, iters);
  if (a == b) return a;
  const double ga = g(a);
  const double gb = g(b);
  if (std::abs(b - a) <= tol) return std::abs(ga) <= std::abs(gb) ? a : b;
  if (std::abs(ga) <= tol) return a;
  if (std::abs(gb) <= tol) return b;
  throw NonConvergenceError("find_root_bracketed: iteration budget exhausted",
                            std::min(std::abs(ga), std::abs(gb)));
}

namespace {

double inf_norm(const VecX& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd fd_jacobian(const std::function<VecX(const VecX&)>& residual, const VecX& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
    VecX xp = x;
    VecX xm = x;
    xp[i] += step;
    xm[i] -= step;
    jac.col(i) = (residual(xp) - residual(xm)) / (2.0 * step);
  }
  return jac;
}

}  // namespace

NewtonResult newton_nd(const std::function<VecX(const VecX&)>& residual, const VecX& x0,
                       NewtonOptions options) {
  NewtonResult out;
  out.x = x0;
  VecX r = residual(out.x);
  if (!r.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "newton_nd: residual not finite at initial point");
  }
  double rn = inf_norm(r);
  for (int it = 0; it < options.max_iter; ++it) {
    if (rn <= options.tol) {
      out.iterations = it;
      out.residual = rn;
      return out;
    }
    const Eigen::MatrixXd jac = fd_jacobian(residual, out.x);
    const VecX dx = jac.colPivHouseholderQr().solve(-r);
    if (!dx.allFinite()) break;

    // Backtrack until the residual decreases; keep the best trial otherwise.
    double lambda = 1.0;
    VecX best_x = out.x + dx;
    VecX best_r;
    double best_n = std::numeric_limits<double>::infinity();
    try {
      best_r = residual(best_x);
      if (best_r.allFinite()) best_n = inf_norm(best_r);
    } catch (const IntegrationError&) {
    }
    for (int k = 0; k < options.max_halvings && !(best_n < rn); ++k) {
      lambda *= 0.5;
      VecX trial = out.x + lambda * dx;
      VecX tr;
      try {
        tr = residual(trial);
      } catch (const IntegrationError&) {
        continue;
      }
      const double tn = tr.allFinite() ? inf_norm(tr) : std::numeric_limits<double>::infinity();
      if (tn < best_n) {
        best_x = std::move(trial);
        best_r = std::move(tr);
        best_n = tn;
      }
    }
    if (!std::isfinite(best_n)) break;
    out.x = std::move(best_x);
    r = std::move(best_r);
    rn = best_n;
  }
  if (rn <= options.tol) {
    out.iterations = options.max_iter;
    out.residual = rn;
    return out;
  }
  throw NonConvergenceError(
      "newton_nd: no convergence within " + std::to_string(options.max_iter) +
          " iterations (last residual " + std::to_string(rn) + ")",
      rn);
}

ExpCellWeights exp_cell_weights(double k, double h) {
  const double z = k * h;
  if (std::abs(z) < 0.1) {
    // int_0^1 e^{-z t} dt and int_0^1 t e^{-z t} dt as power series.
    double term = 1.0;  // (-z)^n / n!
    double s0 = 0.0;
    double s1 = 0.0;
    for (int n = 0; n < 16; ++n) {
      s0 += term / (n + 1);
      s1 += term / (n + 2);
      term *= -z / (n + 1);
    }
    return {h * s0, h * s1};
  }
  const double em = std::expm1(-z);  // e^{-z} - 1
  const double w0 = -em / z;
  const double w1 = (-em - z * std::exp(-z)) / (z * z);
  return {h * w0, h * w1};
}

std::vector<double> exp_convolve_forward(double mu, std::span<const double> g, double h) {
  const std::size_t n = g.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const double decay = std::exp(mu * h);
  const auto w = exp_cell_weights(-mu, h);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    out[j + 1] = decay * out[j] + g[j + 1] * w.w0 + (g[j] - g[j + 1]) * w.w1;
  }
  return out;
}

std::vector<double> exp_convolve_backward(double kappa, std::span<const double> g, double h) {
  const std::size_t n = g.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const double decay = std::exp(-kappa * h);
  const auto w = exp_cell_weights(kappa, h);
  for (std::size_t j = n - 1; j-- > 0;) {
    out[j] = decay * out[j + 1] + g[j] * w.w0 + (g[j + 1] - g[j]) * w.w1;
  }
  return out;
}

MatCellWeights mat_cell_weights(const Mat2& a, double h) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  Mat6 big = Mat6::Zero();
  big.block<2, 2>(0, 0) = a;
  big.block<2, 2>(0, 2) = Mat2::Identity();
  big.block<2, 2>(2, 4) = Mat2::Identity();
  const Mat6 e = mat_exp<6>(big, h);
  MatCellWeights w;
  w.step = e.block<2, 2>(0, 0);
  w.w0 = e.block<2, 2>(0, 2);
  // Block (0, 4) is int_0^h e^{As} (h - s) ds.
  w.w1 = w.w0 - e.block<2, 2>(0, 4) / h;
  return w;
}

std::vector<Vec2> mat_convolve_forward(const Mat2& a, std::span<const Vec2> g, double h) {
  std::vector<Vec2> out(g.size(), Vec2::Zero());
  if (g.size() < 2) return out;
  const auto w = mat_cell_weights(a, h);
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    out[j + 1] = w.step * out[j] + w.w0 * g[j + 1] + w.w1 * (g[j] - g[j + 1]);
  }
  return out;
}

}  // namespace panvein
