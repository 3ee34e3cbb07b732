#include "panvein/steady_parabolic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace panvein {

SteadyProfile EpsSteadyProfile::as_steady() const {
  SteadyProfile s;
  s.grid = grid;
  s.G = G;
  s.I = I;
  s.residual_G = residuals[0];
  s.residual_I = residuals[1];
  s.iterations = iterations;
  s.method = method;
  return s;
}

ModalRoots modal_roots(double lambda, double c, double eps) {
  const double disc = c * c - 4.0 * eps * lambda;
  if (!(disc > 0.0)) {
    throw Error(ErrorCode::Conditioning, "modal_roots: complex fast/slow pair (c^2 < 4 eps Lambda)");
  }
  const double s = c + std::sqrt(disc);
  return {lambda, 2.0 * lambda / s, s / (2.0 * eps)};
}

// ---------------------------------------------------------------------------
// BlockSet

BlockSet::BlockSet(double eps, const EquilibriumReport& eq, const Grid& grid)
    : eps_(eps), c_(eq.params.c), grid_(grid) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::InvalidArgument, "build_blocks: eps must be positive");
  }
  const Mat2& B = eq.B;
  const double half_trace = 0.5 * B.trace();
  const double disc = half_trace * half_trace - B.determinant();
  const double scale = std::max(std::abs(half_trace), 1e-300);
  if (!(disc > 0.0) || std::sqrt(disc) < 0.5e-8 * scale) {
    std::ostringstream msg;
    msg << "build_blocks: B needs distinct real eigenvalues (discriminant " << disc << ")";
    throw Error(ErrorCode::Conditioning, msg.str());
  }
  Eigen::EigenSolver<Mat2> es(B);
  Vec2 lam = es.eigenvalues().real();
  P_ = es.eigenvectors().real();
  if (lam[1] > lam[0]) {
    std::swap(lam[0], lam[1]);
    P_.col(0).swap(P_.col(1));
  }
  P_inv_ = P_.inverse();

  const double L = grid.length();
  for (int i = 0; i < 2; ++i) {
    modes_[static_cast<std::size_t>(i)] = modal_roots(lam[i], c_, eps);
    const auto& m = modes_[static_cast<std::size_t>(i)];
    const double k = m.mue - m.mu0;
    const double cross = std::exp((m.mu0 - m.mue) * L);
    const double den = std::exp(-m.mue * L) - (m.mue - m.mu0 * cross) / k;
    if (!(std::abs(den) > 1e-300)) {
      throw Error(ErrorCode::Singular, "build_blocks: I - D22(L) is singular");
    }
    den_[static_cast<std::size_t>(i)] = den;
    r_[static_cast<std::size_t>(i)] = m.mue * m.mu0 * (cross - 1.0) / (k * den);
    rm_[static_cast<std::size_t>(i)] = m.mu0 * std::expm1(m.mu0 * L) / den;
  }
  phi_.resize(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) phi_[static_cast<std::size_t>(j)] = Phi(grid[j]);
}

Mat4 BlockSet::exp_augmented(double x) const {
  Vec2 d11, d12, d21, d22;
  for (int i = 0; i < 2; ++i) {
    const auto& m = modes_[static_cast<std::size_t>(i)];
    const double k = m.mue - m.mu0;
    const double slow = std::exp(m.mu0 * x);
    const double fast = std::exp(m.mue * x);
    d11[i] = (m.mue * slow - m.mu0 * fast) / k;
    d12[i] = (fast - slow) / k;
    d21[i] = m.mue * m.mu0 * (slow - fast) / k;
    d22[i] = (m.mue * fast - m.mu0 * slow) / k;
  }
  Mat4 out;
  out.block<2, 2>(0, 0) = P_ * d11.asDiagonal() * P_inv_;
  out.block<2, 2>(0, 2) = P_ * d12.asDiagonal() * P_inv_;
  out.block<2, 2>(2, 0) = P_ * d21.asDiagonal() * P_inv_;
  out.block<2, 2>(2, 2) = P_ * d22.asDiagonal() * P_inv_;
  return out;
}

double BlockSet::phi_mode(int i, double x) const {
  const auto& m = modes_[static_cast<std::size_t>(i)];
  const double k = m.mue - m.mu0;
  const double L = grid_.length();
  return ((m.mue - r_[static_cast<std::size_t>(i)]) * std::exp(m.mu0 * x) +
          rm_[static_cast<std::size_t>(i)] * std::exp(m.mue * (x - L))) /
         k;
}

double BlockSet::phi_mode_prime(int i, double x) const {
  const auto& m = modes_[static_cast<std::size_t>(i)];
  const double k = m.mue - m.mu0;
  const double L = grid_.length();
  return ((m.mue - r_[static_cast<std::size_t>(i)]) * m.mu0 * std::exp(m.mu0 * x) +
          rm_[static_cast<std::size_t>(i)] * m.mue * std::exp(m.mue * (x - L))) /
         k;
}

Mat2 BlockSet::Phi(double x) const {
  const Vec2 d(phi_mode(0, x), phi_mode(1, x));
  return P_ * d.asDiagonal() * P_inv_;
}

Mat2 BlockSet::Phi_prime(double x) const {
  const Vec2 d(phi_mode_prime(0, x), phi_mode_prime(1, x));
  return P_ * d.asDiagonal() * P_inv_;
}

std::vector<Mat4> BlockSet::block_table() const {
  std::vector<Mat4> out(static_cast<std::size_t>(grid_.size()));
  for (int j = 0; j < grid_.size(); ++j) out[static_cast<std::size_t>(j)] = exp_augmented(grid_[j]);
  return out;
}

double block_derivative_defect(const BlockSet& blocks, double step, double x_max) {
  const Grid& grid = blocks.grid();
  const double limit = x_max > 0.0 ? x_max : grid.length();
  double worst = 0.0;
  for (int j = 1; j < grid.cells(); ++j) {
    const double x = grid[j];
    if (x > limit) break;
    const Mat4 plus = blocks.exp_augmented(x + step);
    const Mat4 minus = blocks.exp_augmented(x - step);
    const Mat4 here = blocks.exp_augmented(x);
    const Mat2 d11p = (plus.block<2, 2>(0, 0) - minus.block<2, 2>(0, 0)) / (2.0 * step);
    const Mat2 d12p = (plus.block<2, 2>(0, 2) - minus.block<2, 2>(0, 2)) / (2.0 * step);
    const double s21 = std::max(1.0, here.block<2, 2>(2, 0).cwiseAbs().maxCoeff());
    const double s22 = std::max(1.0, here.block<2, 2>(2, 2).cwiseAbs().maxCoeff());
    worst = std::max(worst, (d11p - here.block<2, 2>(2, 0)).cwiseAbs().maxCoeff() / s21);
    worst = std::max(worst, (d12p - here.block<2, 2>(2, 2)).cwiseAbs().maxCoeff() / s22);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// forced response

namespace {

struct ModeIntegrals {
  std::vector<double> slow_forward;  ///< int_0^x e^{mu0 (x-y)} g
  std::vector<double> fast_backward; ///< int_x^L e^{-mue (y-x)} g
  std::vector<double> fast_tail;     ///< e^{-mue (L-x)} int_0^x e^{-mue y} g
  double fast_total = 0.0;           ///< int_0^L e^{-mue y} g
  double slow_total = 0.0;           ///< int_0^L e^{mu0 (L-y)} g
  double den = 0.0;                  ///< -mue + k e^{-mue L} + mu0 e^{(mu0-mue) L}
};

ModeIntegrals mode_integrals(const ModalRoots& m, const std::vector<double>& g, const Grid& grid) {
  const double h = grid.spacing();
  const double L = grid.length();
  const double k = m.mue - m.mu0;
  ModeIntegrals out;
  out.slow_forward = exp_convolve_forward(m.mu0, g, h);
  out.fast_backward = exp_convolve_backward(m.mue, g, h);
  const auto w = exp_cell_weights(m.mue, h);
  const std::size_t n = g.size();
  std::vector<double> K(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double start = std::exp(-m.mue * grid[static_cast<int>(j)]);
    K[j + 1] = K[j] + start * (g[j] * w.w0 + (g[j + 1] - g[j]) * w.w1);
  }
  out.fast_total = K.back();
  out.slow_total = out.slow_forward.back();
  out.fast_tail.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.fast_tail[j] = std::exp(-m.mue * (L - grid[static_cast<int>(j)])) * K[j];
  }
  out.den = -m.mue + k * std::exp(-m.mue * L) + m.mu0 * std::exp((m.mu0 - m.mue) * L);
  return out;
}

std::vector<double> component(const std::vector<Vec2>& v, const Mat2& map, int row) {
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = map.row(row).dot(v[j]);
  return out;
}

}  // namespace

std::vector<Vec2> forced_response(const BlockSet& blocks, const std::vector<Vec2>& g,
                                  std::vector<Vec2>* derivative) {
  const Grid& grid = blocks.grid();
  if (g.size() != static_cast<std::size_t>(grid.size())) {
    throw Error(ErrorCode::InvalidArgument, "forced_response: forcing does not match the grid");
  }
  const double L = grid.length();
  const double eps = blocks.eps();
  const std::size_t n = g.size();
  std::vector<Vec2> modal(n, Vec2::Zero());
  std::vector<Vec2> modal_prime(n, Vec2::Zero());
  for (int i = 0; i < 2; ++i) {
    const auto& m = blocks.modes()[static_cast<std::size_t>(i)];
    const std::vector<double> gi = component(g, blocks.P_inv(), i);
    const ModeIntegrals q = mode_integrals(m, gi, grid);
    const double k = m.mue - m.mu0;
    const double tail_gain = k + m.mu0 * std::exp(m.mu0 * L);
    const double decay_L = std::exp(-m.mue * L);
    const double inflow = m.mue * q.fast_total - m.mu0 * q.slow_total * decay_L;
    const double norm = k * q.den;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid[static_cast<int>(j)];
      const double layer = std::exp(m.mue * (x - L));
      const double slow = std::exp(m.mu0 * x);
      const double bracket = m.mue * q.fast_backward[j] - m.mu0 * q.slow_total * layer -
                             slow * inflow + tail_gain * q.fast_tail[j];
      modal[j][i] = -(bracket / norm - q.slow_forward[j] / k) / eps;
      if (derivative) {
        const double bracket_p = m.mue * (m.mue * q.fast_backward[j] - gi[j]) -
                                 m.mu0 * m.mue * q.slow_total * layer - m.mu0 * slow * inflow +
                                 tail_gain * (m.mue * q.fast_tail[j] + decay_L * gi[j]);
        modal_prime[j][i] =
            -(bracket_p / norm - (m.mu0 * q.slow_forward[j] + gi[j]) / k) / eps;
      }
    }
  }
  std::vector<Vec2> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = blocks.P() * modal[j];
  if (derivative) {
    derivative->resize(n);
    for (std::size_t j = 0; j < n; ++j) (*derivative)[j] = blocks.P() * modal_prime[j];
  }
  return out;
}

std::vector<Vec2> forced_response_hyperbolic(const EquilibriumReport& eq, const Grid& grid,
                                             const std::vector<Vec2>& g) {
  std::vector<Vec2> scaled(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) scaled[j] = g[j] / eq.params.c;
  return mat_convolve_forward(eq.B / eq.params.c, scaled, grid.spacing());
}

SingularTermCheck singular_term_check(const BlockSet& blocks, const std::vector<Vec2>& g) {
  const Grid& grid = blocks.grid();
  const double L = grid.length();
  const double h = grid.spacing();
  const double eps = blocks.eps();
  SingularTermCheck out;
  for (int i = 0; i < 2; ++i) {
    const auto& m = blocks.modes()[static_cast<std::size_t>(i)];
    const double k = m.mue - m.mu0;
    const std::vector<double> gi = component(g, blocks.P_inv(), i);
    const ModeIntegrals q = mode_integrals(m, gi, grid);

    // Direct: I1 from D12(x) (I - D22(L))^{-1} and I3 from the growing kernel.
    const std::vector<double> growing = exp_convolve_forward(m.mue, gi, h);
    const double d22_L = (m.mue * std::exp(m.mue * L) - m.mu0 * std::exp(m.mu0 * L)) / k;
    for (std::size_t j = 0; j < gi.size(); ++j) {
      const double x = grid[static_cast<int>(j)];
      const double d12 = (std::exp(m.mue * x) - std::exp(m.mu0 * x)) / k;
      const double i1 = d12 / (1.0 - d22_L) * (m.mue / k) * growing.back() / eps;
      const double i3 = growing[j] / (k * eps);
      const double reduced = (m.mue * q.fast_backward[j] -
                              m.mue * std::exp(m.mu0 * x) * q.fast_total +
                              q.fast_tail[j] * (k + m.mu0 * std::exp(m.mu0 * L))) /
                             (eps * k * q.den);
      out.max_difference = std::max(out.max_difference, std::abs(i1 + i3 - reduced));
      out.max_magnitude = std::max(out.max_magnitude, std::abs(reduced));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// gap studies

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double denom = n * sxx - sx * sx;
  return denom == 0.0 ? std::nan("") : (n * sxy - sx * sy) / denom;
}

GapTable perturbation_gap_linear(const std::vector<double>& eps_list, const EquilibriumReport& eq,
                                 const Grid& grid, const Vec2& u0) {
  GapTable table;
  const Mat2 A = eq.B / eq.params.c;
  const double scale = u0.norm();
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "perturbation_gap_linear: u0 must be nonzero");
  }
  std::vector<Vec2> reference(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) {
    reference[static_cast<std::size_t>(j)] = mat_exp<2>(A, grid[j]) * u0;
  }
  for (double eps : eps_list) {
    const BlockSet blocks(eps, eq, grid);
    double gap = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
      const auto idx = static_cast<std::size_t>(j);
      gap = std::max(gap, (blocks.phi_table()[idx] * u0 - reference[idx]).norm());
    }
    table.eps.push_back(eps);
    table.gap.push_back(gap / scale);
  }
  table.slope = fit_loglog_slope(table.eps, table.gap);
  return table;
}

GapTable perturbation_gap_forced(const std::vector<double>& eps_list, const EquilibriumReport& eq,
                                 const Grid& grid, const std::function<Vec2(double)>& g) {
  GapTable table;
  std::vector<Vec2> forcing(static_cast<std::size_t>(grid.size()));
  for (int j = 0; j < grid.size(); ++j) forcing[static_cast<std::size_t>(j)] = g(grid[j]);
  const std::vector<Vec2> hyper = forced_response_hyperbolic(eq, grid, forcing);
  const double L = grid.length();
  for (double eps : eps_list) {
    const BlockSet blocks(eps, eq, grid);
    const std::vector<Vec2> resp = forced_response(blocks, forcing);
    double gap = 0.0;
    for (std::size_t j = 0; j < resp.size(); ++j) gap = std::max(gap, (resp[j] - hyper[j]).norm());

    // Four-term estimate: eps |conv|, the backward fast tail, the inflow
    // correction and the outflow layer, each in the eigenbasis.
    double bound = 0.0;
    std::vector<double> per_node(resp.size(), 0.0);
    for (std::size_t j = 0; j < resp.size(); ++j) per_node[j] = eps * hyper[j].norm();
    for (int i = 0; i < 2; ++i) {
      const auto& m = blocks.modes()[static_cast<std::size_t>(i)];
      const std::vector<double> gi = component(forcing, blocks.P_inv(), i);
      const ModeIntegrals q = mode_integrals(m, gi, grid);
      const double weight = blocks.P().col(i).norm();
      for (std::size_t j = 0; j < resp.size(); ++j) {
        const double x = grid[static_cast<int>(j)];
        const double outflow = std::exp(-m.mue * (L - x)) * std::exp(m.mu0 * (L - x)) *
                               std::abs(q.slow_forward[j]);
        per_node[j] += weight * (std::abs(q.fast_backward[j]) +
                                 std::exp(m.mu0 * x) * std::abs(q.fast_total) + eps * outflow);
      }
    }
    for (double v : per_node) bound = std::max(bound, v);
    table.eps.push_back(eps);
    table.gap.push_back(gap);
    table.bound_ratio.push_back(bound > 0.0 ? gap / bound : 0.0);
  }
  table.slope = fit_loglog_slope(table.eps, table.gap);
  return table;
}

// ---------------------------------------------------------------------------
// collocation

std::vector<double> graded_mesh(const Grid& grid, double eps, double c) {
  const double h = grid.spacing();
  const double L = grid.length();
  const int N = grid.cells();
  std::vector<double> nodes = grid.nodes();
  const double first = eps / c / 200.0;
  if (!(first < 0.5 * h)) return nodes;
  constexpr double kRatio = 1.01;
  const int count = static_cast<int>(std::ceil(std::log(h / first) / std::log(kRatio))) + 1;
  std::vector<double> spacing(static_cast<std::size_t>(count));
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    spacing[static_cast<std::size_t>(i)] = first * std::pow(kRatio, i);
    total += spacing[static_cast<std::size_t>(i)];
  }
  const int m = std::clamp(static_cast<int>(std::lround(total / h)), 1, N / 2);
  const double stretch = m * h / total;
  std::vector<double> mesh(nodes.begin(), nodes.begin() + (N - m + 1));
  std::vector<double> tail;
  double pos = L;
  for (int i = 0; i + 1 < count; ++i) {
    pos -= spacing[static_cast<std::size_t>(i)] * stretch;
    tail.push_back(pos);
  }
  std::reverse(tail.begin(), tail.end());
  for (double x : tail) {
    if (x > mesh.back()) mesh.push_back(x);
  }
  mesh.push_back(L);
  return mesh;
}

namespace {

// Three-point Lagrange interpolation of samples on a sorted mesh.
double interp3(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  auto it = std::lower_bound(xs.begin(), xs.end(), x);
  std::size_t j = static_cast<std::size_t>(std::distance(xs.begin(), it));
  if (j < xs.size() && xs[j] == x) return ys[j];
  j = std::clamp<std::size_t>(j, 1, xs.size() - 2);
  const double x0 = xs[j - 1], x1 = xs[j], x2 = xs[j + 1];
  const double l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
  return l0 * ys[j - 1] + l1 * ys[j] + l2 * ys[j + 1];
}

// Derivative weights at x_0 from x_0, x_0 + h1, x_0 + h1 + h2.
std::array<double, 3> one_sided(double h1, double h2) {
  return {-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))};
}

std::vector<double> mesh_derivative(const std::vector<double>& x, const std::vector<double>& u) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double h1 = x[j] - x[j - 1];
    const double h2 = x[j + 1] - x[j];
    d[j] = (h1 * h1 * u[j + 1] - h2 * h2 * u[j - 1] + (h2 * h2 - h1 * h1) * u[j]) /
           (h1 * h2 * (h1 + h2));
  }
  const auto wl = one_sided(x[1] - x[0], x[2] - x[1]);
  d[0] = wl[0] * u[0] + wl[1] * u[1] + wl[2] * u[2];
  const auto wr = one_sided(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
  d[n - 1] = -(wr[0] * u[n - 1] + wr[1] * u[n - 2] + wr[2] * u[n - 3]);
  return d;
}

}  // namespace

EpsSteadyProfile solve_eps_collocation(const ModelParams& p, const SigmaProfile& sigma, double eps,
                                       const Grid& grid, const CollocationOptions& options) {
  p.validate();
  if (!(eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solve_eps_collocation: eps must be positive");
  }
  const SteadyProfile start = options.initial ? *options.initial : solve_shooting(p, sigma, grid);
  const std::vector<double> x = graded_mesh(grid, eps, p.c);
  const int n = static_cast<int>(x.size());
  const int N = n - 1;

  VecX U(2 * n);
  const std::vector<double> uniform = grid.nodes();
  for (int j = 0; j < n; ++j) {
    U[j] = interp3(uniform, start.G, x[static_cast<std::size_t>(j)]);
    U[n + j] = interp3(uniform, start.I, x[static_cast<std::size_t>(j)]);
  }
  std::vector<double> sig(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) sig[static_cast<std::size_t>(j)] = sigma(x[static_cast<std::size_t>(j)]);

  // Stencils for interior rows.
  std::vector<std::array<double, 3>> stencil(static_cast<std::size_t>(n));
  for (int j = 1; j < N; ++j) {
    const double h1 = x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j) - 1];
    const double h2 = x[static_cast<std::size_t>(j) + 1] - x[static_cast<std::size_t>(j)];
    const double s = h1 * h2 * (h1 + h2);
    const double minus = -eps * 2.0 / (h1 * (h1 + h2)) - p.c * h2 * h2 / s;
    const double centre = eps * 2.0 / (h1 * h2) + p.c * (h2 * h2 - h1 * h1) / s;
    const double plus = -eps * 2.0 / (h2 * (h1 + h2)) + p.c * h1 * h1 / s;
    stencil[static_cast<std::size_t>(j)] = {minus, centre, plus};
  }
  const auto wl = one_sided(x[1] - x[0], x[2] - x[1]);
  const auto wr_raw = one_sided(x[static_cast<std::size_t>(N)] - x[static_cast<std::size_t>(N) - 1],
                                x[static_cast<std::size_t>(N) - 1] - x[static_cast<std::size_t>(N) - 2]);
  const std::array<double, 3> wr{-wr_raw[0], -wr_raw[1], -wr_raw[2]};
  const std::array<double, 2> alpha{p.alpha1, p.alpha2};

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  VecX r(2 * n);
  int it = 0;
  double step_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (; it < options.max_iter; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(10 * n));
    for (int comp = 0; comp < 2; ++comp) {
      const int base = comp * n;
      for (int j = 1; j < N; ++j) {
        const auto& st = stencil[static_cast<std::size_t>(j)];
        const double G = U[j];
        const double I = U[n + j];
        const Vec2 f = reaction_rhs(G, I, sig[static_cast<std::size_t>(j)], p);
        const Mat2 jac = reaction_jacobian(G, I, sig[static_cast<std::size_t>(j)], p);
        r[base + j] = st[0] * U[base + j - 1] + st[1] * U[base + j] + st[2] * U[base + j + 1] - f[comp];
        trip.emplace_back(base + j, base + j - 1, st[0]);
        trip.emplace_back(base + j, base + j, st[1]);
        trip.emplace_back(base + j, base + j + 1, st[2]);
        trip.emplace_back(base + j, j, -jac(comp, 0));
        trip.emplace_back(base + j, n + j, -jac(comp, 1));
      }
      const double a = alpha[static_cast<std::size_t>(comp)];
      r[base] = U[base + N] - a * U[base];
      trip.emplace_back(base, base + N, 1.0);
      trip.emplace_back(base, base, -a);
      r[base + N] = wr[0] * U[base + N] + wr[1] * U[base + N - 1] + wr[2] * U[base + N - 2] -
                    (wl[0] * U[base] + wl[1] * U[base + 1] + wl[2] * U[base + 2]);
      for (int q = 0; q < 3; ++q) {
        trip.emplace_back(base + N, base + N - q, wr[static_cast<std::size_t>(q)]);
        trip.emplace_back(base + N, base + q, -wl[static_cast<std::size_t>(q)]);
      }
    }
    Eigen::SparseMatrix<double> J(2 * n, 2 * n);
    J.setFromTriplets(trip.begin(), trip.end());
    if (it == 0) lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
      throw Error(ErrorCode::Singular, "solve_eps_collocation: singular Newton matrix");
    }
    const VecX delta = lu.solve(-r);
    if (!delta.allFinite()) break;
    U += delta;
    const double previous = step_norm;
    step_norm = delta.cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    // Past the quadratic phase the update sits on the rounding floor of the
    // fine boundary-layer cells; a step that stops shrinking there is done.
    const bool stalled = step_norm <= 1e-6 * scale && step_norm > 0.5 * previous;
    if (step_norm <= options.tol * scale || stalled) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "solve_eps_collocation: Newton did not converge at eps = " << eps
        << "; continue from a larger eps or from the eps = 0 profile";
    throw NonConvergenceError(msg.str(), step_norm);
  }

  std::vector<double> Gm(U.data(), U.data() + n);
  std::vector<double> Im(U.data() + n, U.data() + 2 * n);
  const std::vector<double> Gd = mesh_derivative(x, Gm);
  const std::vector<double> Id = mesh_derivative(x, Im);

  EpsSteadyProfile out;
  out.grid = grid;
  out.eps = eps;
  out.iterations = it;
  out.method = SteadyMethod::Collocation;
  const auto nu = static_cast<std::size_t>(grid.size());
  out.G.resize(nu);
  out.I.resize(nu);
  out.Gp.resize(nu);
  out.Ip.resize(nu);
  for (std::size_t j = 0; j < nu; ++j) {
    out.G[j] = interp3(x, Gm, uniform[j]);
    out.I[j] = interp3(x, Im, uniform[j]);
    out.Gp[j] = interp3(x, Gd, uniform[j]);
    out.Ip[j] = interp3(x, Id, uniform[j]);
  }
  out.residuals = {std::abs(Gm.back() - p.alpha1 * Gm.front()),
                   std::abs(Im.back() - p.alpha2 * Im.front()), std::abs(Gd.back() - Gd.front()),
                   std::abs(Id.back() - Id.front())};
  for (std::size_t j = 0; j < nu; ++j) {
    if (!(out.G[j] > 0.0) || !(out.I[j] > 0.0)) {
      throw NonConvergenceError("solve_eps_collocation: non-positive profile", step_norm);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// block iteration

ContractionCertificate eps_contraction_certificate(const ModelParams& p, double sigma_const,
                                                   double eps, const Grid& grid) {
  const EquilibriumReport eq = find_equilibrium(p, sigma_const);
  const BlockSet blocks(eps, eq, grid);
  const Mat2 D = p.boundary_matrix();
  const Mat2 M = D - blocks.E_L();
  if (!(std::abs(M.determinant()) > 1e-14 * M.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::Singular, "eps_contraction_certificate: D - E(L) is singular");
  }
  const Mat2 inv = M.inverse();
  const Vec2 shift = inv * (Mat2::Identity() - D) * eq.u_star();
  ContractionCertificate cert;
  for (const Mat2& phi : blocks.phi_table()) {
    cert.xi0_norm = std::max(cert.xi0_norm, (phi * shift).cwiseAbs().maxCoeff());
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

EpsSteadyProfile solve_eps_block(const ModelParams& p, double sigma_const, double eps,
                                 const Grid& grid, const BlockOptions& options) {
  p.validate();
  if (std::abs(grid.length() - p.L) > 1e-12 * p.L) {
    throw Error(ErrorCode::InvalidArgument, "solve_eps_block: grid length does not match L");
  }
  const EquilibriumReport eq = find_equilibrium(p, sigma_const);
  const BlockSet blocks(eps, eq, grid);
  const Mat2 D = p.boundary_matrix();
  const Mat2 M = D - blocks.E_L();
  if (!(std::abs(M.determinant()) > 1e-14 * M.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::Singular, "solve_eps_block: D - E(L) is singular");
  }
  const Mat2 inv = M.inverse();
  const Vec2 base_shift = (Mat2::Identity() - D) * eq.u_star();
  const auto n = static_cast<std::size_t>(grid.size());
  std::vector<Mat2> phi_prime(n);
  for (std::size_t j = 0; j < n; ++j) phi_prime[j] = blocks.Phi_prime(grid[static_cast<int>(j)]);

  std::vector<Vec2> U(n), Up(n);
  for (std::size_t j = 0; j < n; ++j) {
    U[j] = eq.u_star() + blocks.phi_table()[j] * inv * base_shift;
    Up[j] = phi_prime[j] * inv * base_shift;
  }
  int iterations = 0;
  if (!options.linear_only) {
    std::vector<Vec2> forcing(n), Sp;
    double last_change = std::numeric_limits<double>::infinity();
    int growths = 0;
    bool converged = false;
    for (int it = 1; it <= options.max_iter; ++it) {
      for (std::size_t j = 0; j < n; ++j) forcing[j] = remainder_F(U[j][0], U[j][1], eq);
      const std::vector<Vec2> S = forced_response(blocks, forcing, &Sp);
      const Vec2 shift = inv * (base_shift + S.back());
      double change = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const Vec2 next = eq.u_star() + blocks.phi_table()[j] * shift + S[j];
        change = std::max(change, (next - U[j]).cwiseAbs().maxCoeff());
        U[j] = next;
        Up[j] = phi_prime[j] * shift + Sp[j];
      }
      iterations = it;
      if (!std::isfinite(change) || (change > last_change && ++growths >= 5)) {
        const ContractionCertificate cert = eps_contraction_certificate(p, sigma_const, eps, grid);
        std::ostringstream msg;
        msg << "solve_eps_block: iterates diverge at eps = " << eps << "; contraction factor "
            << cert.factor << (cert.valid ? ", radius r_eps = " + std::to_string(cert.r)
                                          : " > 1, no radius r_eps available");
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
      throw NonConvergenceError("solve_eps_block: no convergence within " +
                                    std::to_string(options.max_iter) + " iterations",
                                last_change);
    }
  }

  EpsSteadyProfile out;
  out.grid = grid;
  out.eps = eps;
  out.iterations = iterations;
  out.method = SteadyMethod::BlockIteration;
  out.G.resize(n);
  out.I.resize(n);
  out.Gp.resize(n);
  out.Ip.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.G[j] = U[j][0];
    out.I[j] = U[j][1];
    out.Gp[j] = Up[j][0];
    out.Ip[j] = Up[j][1];
  }
  out.residuals = {std::abs(out.G.back() - p.alpha1 * out.G.front()),
                   std::abs(out.I.back() - p.alpha2 * out.I.front()),
                   std::abs(out.Gp.back() - out.Gp.front()),
                   std::abs(out.Ip.back() - out.Ip.front())};
  return out;
}

// ---------------------------------------------------------------------------
// sweep

EpsSweepTable eps_sweep(const ModelParams& p, double sigma_const, const std::vector<double>& eps_list,
                        const Grid& grid, EpsSolver solver, int workers) {
  const SigmaProfile sigma = SigmaProfile::homogeneous(sigma_const, p.L);
  const SteadyProfile reference = solver == EpsSolver::Block
                                      ? solve_picard(p, sigma_const, grid)
                                      : solve_shooting(p, sigma, grid);
  EpsSweepTable table;
  table.entries.resize(eps_list.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < eps_list.size(); i = next++) {
      EpsSweepEntry& e = table.entries[i];
      e.eps = eps_list[i];
      if (e.eps == 0.0) {
        e.ok = true;
        continue;
      }
      try {
        CollocationOptions copt;
        copt.initial = reference;
        const EpsSteadyProfile prof = solver == EpsSolver::Block
                                          ? solve_eps_block(p, sigma_const, e.eps, grid)
                                          : solve_eps_collocation(p, sigma, e.eps, grid, copt);
        for (std::size_t j = 0; j < prof.G.size(); ++j) {
          e.gap = std::max({e.gap, std::abs(prof.G[j] - reference.G[j]),
                            std::abs(prof.I[j] - reference.I[j])});
          e.max_slope = std::max({e.max_slope, std::abs(prof.Gp[j]), std::abs(prof.Ip[j])});
        }
        e.ok = true;
      } catch (const Error& err) {
        e.error = err.what();
      }
    }
  };
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(eps_list.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < count; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<double> xs, ys;
  std::vector<const EpsSweepEntry*> ordered;
  for (const auto& e : table.entries) {
    if (e.ok && e.eps > 0.0) {
      xs.push_back(e.eps);
      ys.push_back(e.gap);
      ordered.push_back(&e);
    }
  }
  table.order = fit_loglog_slope(xs, ys);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->eps > b->eps; });
  table.monotone = ordered.size() >= 2;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (!(ordered[i]->gap < ordered[i - 1]->gap)) table.monotone = false;
  }
  return table;
}

}  // namespace panvein
