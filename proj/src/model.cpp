#include "panvein/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace panvein {

namespace {

void require(bool ok, const char* field, const char* rule, double value) {
  if (ok) return;
  std::ostringstream msg;
  msg << field << " " << rule << " (got " << value << ")";
  throw Error(ErrorCode::Validation, msg.str());
}

}  // namespace

void ModelParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(c) && c > 0.0, "params.c", "must be > 0", c);
  require(finite(eps) && eps >= 0.0, "params.eps", "must be >= 0", eps);
  require(finite(L) && L > 0.0, "params.L", "must be > 0", L);
  require(finite(G_in) && G_in > 0.0, "params.G_in", "must be > 0", G_in);
  require(finite(a) && a > 0.0, "params.a", "must be > 0", a);
  require(finite(b) && b > 0.0, "params.b", "must be > 0", b);
  require(finite(d_i) && d_i > 0.0, "params.d_i", "must be > 0", d_i);
  require(finite(alpha1) && alpha1 >= 1.0, "params.alpha1", "must be >= 1", alpha1);
  require(finite(alpha2) && alpha2 >= 1.0, "params.alpha2", "must be >= 1", alpha2);
}

// ---------------------------------------------------------------------------
// sigma(x)

const char* to_string(SigmaKind kind) noexcept {
  switch (kind) {
    case SigmaKind::Homogeneous: return "homogeneous";
    case SigmaKind::LinearIncreasing: return "linear-increasing";
    case SigmaKind::LinearDecreasing: return "linear-decreasing";
    case SigmaKind::Quadratic: return "quadratic";
    case SigmaKind::ReversedQuadratic: return "reversed-quadratic";
    case SigmaKind::Custom: return "custom";
  }
  return "unknown";
}

SigmaKind sigma_kind_from_string(const std::string& name) {
  for (auto k : {SigmaKind::Homogeneous, SigmaKind::LinearIncreasing,
                 SigmaKind::LinearDecreasing, SigmaKind::Quadratic,
                 SigmaKind::ReversedQuadratic, SigmaKind::Custom}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::Validation, "sigma.kind: unknown profile kind '" + name + "'");
}

SigmaProfile SigmaProfile::homogeneous(double base, double length) {
  SigmaProfile s;
  s.kind_ = SigmaKind::Homogeneous;
  s.length_ = length;
  s.end0_ = s.endL_ = s.vertex_ = base;
  s.finish();
  return s;
}

SigmaProfile SigmaProfile::linear(double end0, double endL, double length) {
  SigmaProfile s;
  s.kind_ = endL >= end0 ? SigmaKind::LinearIncreasing : SigmaKind::LinearDecreasing;
  s.length_ = length;
  s.end0_ = end0;
  s.endL_ = endL;
  s.vertex_ = 0.5 * (end0 + endL);
  s.finish();
  return s;
}

SigmaProfile SigmaProfile::quadratic(double end0, double vertex, double endL, double length) {
  SigmaProfile s;
  s.kind_ = vertex <= 0.5 * (end0 + endL) ? SigmaKind::Quadratic : SigmaKind::ReversedQuadratic;
  s.length_ = length;
  s.end0_ = end0;
  s.endL_ = endL;
  s.vertex_ = vertex;
  s.finish();
  return s;
}

SigmaProfile SigmaProfile::custom(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::ProfileValidity, "sigma: custom profile needs at least 2 samples");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first > samples[i - 1].first)) {
      throw Error(ErrorCode::ProfileValidity, "sigma: custom sample positions must increase");
    }
  }
  if (samples.front().first != 0.0) {
    throw Error(ErrorCode::ProfileValidity, "sigma: custom samples must start at x = 0");
  }
  SigmaProfile s;
  s.kind_ = SigmaKind::Custom;
  s.length_ = samples.back().first;
  s.end0_ = samples.front().second;
  s.endL_ = samples.back().second;
  s.samples_ = std::move(samples);
  s.vertex_ = s.eval_unchecked(0.5 * s.length_);
  s.finish();
  return s;
}

std::vector<std::pair<std::string, SigmaProfile>> SigmaProfile::catalog(double base,
                                                                        double length) {
  return {
      {"homogeneous", homogeneous(base, length)},
      {"linear_inc", linear(0.5 * base, 1.5 * base, length)},
      {"linear_dec", linear(1.5 * base, 0.5 * base, length)},
      {"quadratic", quadratic(1.5 * base, 0.5 * base, 1.5 * base, length)},
      {"reversed_quadratic", quadratic(0.5 * base, 1.5 * base, 0.5 * base, length)},
  };
}

double SigmaProfile::constant_value() const {
  if (!is_constant()) {
    throw Error(ErrorCode::Mode, std::string("sigma: constant level requested from a ") +
                                     to_string(kind_) + " profile");
  }
  return end0_;
}

double SigmaProfile::eval_unchecked(double x) const noexcept {
  switch (kind_) {
    case SigmaKind::Homogeneous:
      return end0_;
    case SigmaKind::LinearIncreasing:
    case SigmaKind::LinearDecreasing:
      return end0_ + (endL_ - end0_) * (x / length_);
    case SigmaKind::Quadratic:
    case SigmaKind::ReversedQuadratic: {
      // Lagrange form through t = 0, 1/2, 1.
      const double t = x / length_;
      return end0_ * 2.0 * (t - 0.5) * (t - 1.0) - vertex_ * 4.0 * t * (t - 1.0) +
             endL_ * 2.0 * t * (t - 0.5);
    }
    case SigmaKind::Custom: {
      auto it = std::upper_bound(samples_.begin(), samples_.end(), x,
                                 [](double v, const auto& s) { return v < s.first; });
      if (it == samples_.begin()) return samples_.front().second;
      if (it == samples_.end()) return samples_.back().second;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (x - lo.first) / (hi.first - lo.first);
      return lo.second + w * (hi.second - lo.second);
    }
  }
  return 0.0;
}

void SigmaProfile::finish() {
  if (!(length_ > 0.0) || !std::isfinite(length_)) {
    throw Error(ErrorCode::ProfileValidity, "sigma: profile length must be positive");
  }
  std::vector<double> candidates{eval_unchecked(0.0), eval_unchecked(length_)};
  if (kind_ == SigmaKind::Quadratic || kind_ == SigmaKind::ReversedQuadratic) {
    // Stationary point of the parabola, if interior.
    const double c2 = 2.0 * end0_ - 4.0 * vertex_ + 2.0 * endL_;
    const double c1 = -3.0 * end0_ + 4.0 * vertex_ - endL_;
    if (c2 != 0.0) {
      const double t = -c1 / (2.0 * c2);
      if (t > 0.0 && t < 1.0) candidates.push_back(eval_unchecked(t * length_));
    }
  }
  for (const auto& s : samples_) candidates.push_back(s.second);
  sup_ = *std::max_element(candidates.begin(), candidates.end());
  inf_ = *std::min_element(candidates.begin(), candidates.end());
  if (!std::isfinite(sup_) || !(inf_ > 0.0)) {
    std::ostringstream msg;
    msg << "sigma: " << to_string(kind_) << " profile must stay positive (inf = " << inf_ << ")";
    throw Error(ErrorCode::ProfileValidity, msg.str());
  }
}

double SigmaProfile::operator()(double x) const {
  const double slack = 1e-12 * length_;
  if (!(x >= -slack && x <= length_ + slack)) {
    std::ostringstream msg;
    msg << "sigma: x = " << x << " outside [0, " << length_ << "]";
    throw Error(ErrorCode::Domain, msg.str());
  }
  return eval_unchecked(std::clamp(x, 0.0, length_));
}

SigmaProfile SigmaProfile::rescaled(double length) const {
  SigmaProfile s = *this;
  const double scale = length / length_;
  s.length_ = length;
  for (auto& sample : s.samples_) sample.first *= scale;
  s.finish();
  return s;
}

double sigma_eval(const SigmaProfile& profile, double x) {
  const double v = profile(x);
  if (!(v > 0.0)) {
    throw Error(ErrorCode::ProfileValidity, "sigma: non-positive value");
  }
  return v;
}

// ---------------------------------------------------------------------------
// reaction terms

Vec2 reaction_rhs(double G, double I, double sigma_x, const ModelParams& p) noexcept {
  const double g2 = G * G;
  return {p.G_in - p.a * G * I, sigma_x * g2 / (p.b * p.b + g2) - p.d_i * I};
}

Vec2 reaction_rhs(double G, double I, double x, const ModelParams& p, const SigmaProfile& sigma) {
  return reaction_rhs(G, I, sigma(x), p);
}

Mat2 reaction_jacobian(double G, double I, double sigma_x, const ModelParams& p) noexcept {
  const double b2 = p.b * p.b;
  const double den = b2 + G * G;
  Mat2 j;
  j << -p.a * I, -p.a * G, 2.0 * sigma_x * b2 * G / (den * den), -p.d_i;
  return j;
}

std::pair<std::complex<double>, std::complex<double>> equilibrium_eigenvalues(
    const ModelParams& p, double sigma, double G_star, double I_star) {
  const double aI = p.a * I_star;
  const double coupling =
      2.0 * p.a * p.d_i * p.d_i * p.b * p.b * I_star * I_star / (sigma * G_star * G_star);
  const std::complex<double> root =
      std::sqrt(std::complex<double>((aI - p.d_i) * (aI - p.d_i) - 4.0 * coupling, 0.0));
  const double mean = -0.5 * (aI + p.d_i);
  return {mean + 0.5 * root, mean - 0.5 * root};
}

EquilibriumReport find_equilibrium(const ModelParams& p, double sigma_const) {
  p.validate();
  if (!(sigma_const > 0.0) || !std::isfinite(sigma_const)) {
    throw Error(ErrorCode::InvalidArgument, "find_equilibrium: sigma must be positive");
  }
  EquilibriumReport eq;
  eq.params = p;
  eq.sigma = sigma_const;
  const double g_ratio = p.G_in * p.d_i / (p.a * sigma_const);
  eq.bounds = {g_ratio, std::max(2.0 * g_ratio, p.b), sigma_const / p.d_i};

  // Eliminating I = G_in/(a G) leaves sigma a G^3 = d_i G_in (b^2 + G^2).
  auto cubic = [&](double G) {
    return sigma_const * p.a * G * G * G - p.d_i * p.G_in * (p.b * p.b + G * G);
  };
  const double hi = 10.0 * eq.bounds.G_upper;
  if (!(cubic(hi) > 0.0)) {
    std::ostringstream msg;
    msg << "find_equilibrium: no root bracketed on (0, " << hi << "]";
    throw Error(ErrorCode::ParameterRegime, msg.str());
  }
  RootOptions opts;
  opts.tol = 1e-13 * hi;
  eq.G_star = find_root_bracketed(cubic, 0.0, hi, opts);
  eq.I_star = p.G_in / (p.a * eq.G_star);
  eq.B = reaction_jacobian(eq.G_star, eq.I_star, sigma_const, p);

  auto [l1, l2] = equilibrium_eigenvalues(p, sigma_const, eq.G_star, eq.I_star);
  if (l2.real() > l1.real()) std::swap(l1, l2);
  eq.lambda1 = l1;
  eq.lambda2 = l2;

  // Envelope: fix rho below the spectral abscissa, fit the smallest M over a
  // window long enough for the transient to die out.
  const double abscissa = std::abs(l1.real());
  eq.rho = 0.95 * abscissa;
  const double window = std::max(p.L, 60.0 / abscissa);
  constexpr int kSamples = 20000;
  double m = 1.0;
  auto probe = [&](double x) {
    m = std::max(m, norm2(mat_exp<2>(eq.B, x)) * std::exp(eq.rho * x));
  };
  const Mat2 step = mat_exp<2>(eq.B, window / kSamples);
  Mat2 e = Mat2::Identity();
  for (int i = 0; i <= kSamples; ++i) {
    m = std::max(m, norm2(e) * std::exp(eq.rho * window * i / kSamples));
    e = e * step;
  }
  for (int i = 0; i <= static_cast<int>(std::floor(p.L)); ++i) probe(i);
  eq.M = m * (1.0 + 1e-12);
  return eq;
}

Vec2 remainder_F(double G, double I, const EquilibriumReport& eq) {
  const auto& p = eq.params;
  const double b2 = p.b * p.b;
  const double dG = G - eq.G_star;
  const double dI = I - eq.I_star;
  const double den = b2 + eq.G_star * eq.G_star;
  const double sum = G + eq.G_star;
  return {-p.a * dI * dG, eq.sigma * b2 * dG * dG / (den * den) * (1.0 - sum * sum / (b2 + G * G))};
}

Vec2 remainder_F(double G, double I, const EquilibriumReport& eq, const SigmaProfile& sigma) {
  if (!sigma.is_constant() || sigma.constant_value() != eq.sigma) {
    throw Error(ErrorCode::Mode,
                "remainder_F: requires the constant sigma the equilibrium was built with");
  }
  return remainder_F(G, I, eq);
}

double nonlinearity_constant(const EquilibriumReport& eq) {
  const auto& p = eq.params;
  const double den = p.b * p.b + eq.G_star * eq.G_star;
  return p.a + eq.sigma * p.b * p.b / (den * den);
}

double remainder_growth_factor(const EquilibriumReport& eq, double radius) {
  const double b2 = eq.params.b * eq.params.b;
  const double lo = std::max(0.0, eq.G_star - radius);
  const double hi = eq.G_star + radius;
  constexpr int kSamples = 2000;
  double best = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double G = lo + (hi - lo) * i / kSamples;
    const double sum = G + eq.G_star;
    best = std::max(best, std::abs(1.0 - sum * sum / (b2 + G * G)));
  }
  return best;
}

}  // namespace panvein
