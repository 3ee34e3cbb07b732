#include "panvein/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace panvein {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Marginal: return "marginal";
    case Verdict::Unstable: return "unstable";
  }
  return "unknown";
}

Mat2 linearized_matrix(double G, double I, const ModelParams& p, double sigma_x) {
  return reaction_jacobian(G, I, sigma_x, p);
}

TransferMatrices transfer_matrix(const SteadyProfile& profile, const ModelParams& p,
                                 const SigmaProfile& sigma) {
  const Grid& grid = profile.grid;
  const double h = grid.spacing();
  const int n = grid.size();
  std::vector<Mat2> bbar(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto u = profile.at(j);
    bbar[static_cast<std::size_t>(j)] = linearized_matrix(u[0], u[1], p, sigma(grid[j])) / p.c;
  }
  Mat2 integral = Mat2::Zero();
  for (int j = 0; j + 1 < n; ++j) {
    integral += 0.5 * h * (bbar[static_cast<std::size_t>(j)] + bbar[static_cast<std::size_t>(j) + 1]);
  }
  TransferMatrices out;
  out.integrated = mat_exp<2>(integral, 1.0);
  out.product = Mat2::Identity();
  for (int j = 0; j + 1 < n; ++j) {
    const Mat2 mid =
        0.5 * (bbar[static_cast<std::size_t>(j)] + bbar[static_cast<std::size_t>(j) + 1]);
    out.product = mat_exp<2>(mid, h) * out.product;
  }
  out.gap = norm2(out.integrated - out.product);
  return out;
}

QuadRoots quadratic_roots_from_coefficients(double c0, double c1, double c2) {
  const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2)});
  if (!(std::abs(c2) > 1e-12 * scale)) {
    const double root = c1 != 0.0 ? -c0 / c1 : std::nan("");
    std::ostringstream msg;
    msg << "quadratic_roots: leading coefficient " << c2 << " vanishes; single root " << root;
    throw DegenerateQuadraticError(msg.str(), root);
  }
  using C = std::complex<double>;
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  QuadRoots r;
  if (disc >= 0.0) {
    // Avoid cancellation: q = -(c1 + sign(c1) sqrt(disc))/2, roots q/c2 and c0/q.
    const double s = std::sqrt(disc);
    const double q = -0.5 * (c1 + (c1 >= 0.0 ? s : -s));
    if (q != 0.0) {
      r = {C(q / c2), C(c0 / q)};
    } else {
      r = {C(0.0), C(0.0)};
    }
  } else {
    const double re = -c1 / (2.0 * c2);
    const double im = std::sqrt(-disc) / (2.0 * std::abs(c2));
    r = {C(re, -im), C(re, im)};
  }
  if (std::abs(r[1]) < std::abs(r[0])) std::swap(r[0], r[1]);
  return r;
}

QuadRoots quadratic_roots(const Mat2& b, double alpha1, double alpha2) {
  return quadratic_roots_from_coefficients(alpha1 * alpha2, -(alpha1 * b(1, 1) + alpha2 * b(0, 0)),
                                           b.determinant());
}

VerdictResult verdict(const QuadRoots& roots, double L_eff, double margin) {
  VerdictResult v;
  v.min_modulus = std::min(std::abs(roots[0]), std::abs(roots[1]));
  v.lead_re = -std::log(v.min_modulus) / L_eff;
  if (v.min_modulus > 1.0 + margin) {
    v.verdict = Verdict::Stable;
  } else if (v.min_modulus >= 1.0 - margin) {
    v.verdict = Verdict::Marginal;
  } else {
    v.verdict = Verdict::Unstable;
  }
  return v;
}

std::vector<std::complex<double>> eigenvalue_lattice(const QuadRoots& roots, double L_eff,
                                                     int k_max) {
  std::vector<std::complex<double>> out;
  for (const auto& root : roots) {
    const double re = -std::log(std::abs(root)) / L_eff;
    for (int k = -k_max; k <= k_max; ++k) {
      out.emplace_back(re, -(std::arg(root) + 2.0 * k * std::numbers::pi) / L_eff);
    }
  }
  return out;
}

StabilityReport analyze_stability(const SteadyProfile& profile, const ModelParams& p,
                                  const SigmaProfile& sigma, const StabilityOptions& options) {
  const TransferMatrices t = transfer_matrix(profile, p, sigma);
  StabilityReport rep;
  rep.b_matrix = t.integrated;
  rep.product_matrix = t.product;
  rep.commutator_gap = t.gap;
  const Mat2& b = options.use_product ? t.product : t.integrated;
  rep.quad_coeffs = {p.alpha1 * p.alpha2, -(p.alpha1 * b(1, 1) + p.alpha2 * b(0, 0)),
                     b.determinant()};
  rep.roots = quadratic_roots(b, p.alpha1, p.alpha2);
  const VerdictResult v = verdict(rep.roots, p.transit(), options.margin);
  rep.lead_re = v.lead_re;
  rep.verdict = v.verdict;
  rep.lattice = eigenvalue_lattice(rep.roots, p.transit(), 2);
  return rep;
}

}  // namespace panvein
