#include "panvein/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "panvein/evolution.hpp"
#include "panvein/stability.hpp"
#include "panvein/steady_hyperbolic.hpp"
#include "panvein/steady_parabolic.hpp"

namespace panvein {

namespace fs = std::filesystem;

const char* to_string(ScenarioMode mode) noexcept {
  switch (mode) {
    case ScenarioMode::Equilibrium: return "equilibrium";
    case ScenarioMode::Steady: return "steady";
    case ScenarioMode::SteadyEps: return "steady-eps";
    case ScenarioMode::Stability: return "stability";
    case ScenarioMode::Evolve: return "evolve";
    case ScenarioMode::EpsSweep: return "eps-sweep";
    case ScenarioMode::VelocitySweep: return "velocity-sweep";
    case ScenarioMode::SigmaCatalog: return "sigma-catalog";
  }
  return "unknown";
}

ScenarioMode scenario_mode_from_string(const std::string& name) {
  for (auto m : {ScenarioMode::Equilibrium, ScenarioMode::Steady, ScenarioMode::SteadyEps,
                 ScenarioMode::Stability, ScenarioMode::Evolve, ScenarioMode::EpsSweep,
                 ScenarioMode::VelocitySweep, ScenarioMode::SigmaCatalog}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::Validation, "mode: unknown mode '" + name + "'");
}

SigmaProfile SigmaSpec::build(double length) const {
  const double lo = 0.5 * base;
  const double hi = 1.5 * base;
  auto check_kind = [&](const SigmaProfile& s) {
    if (s.kind() != kind) {
      throw Error(ErrorCode::Validation, std::string("sigma: shape values describe a ") +
                                             to_string(s.kind()) + " profile, not " +
                                             to_string(kind));
    }
    return s;
  };
  try {
    switch (kind) {
      case SigmaKind::Homogeneous:
        return SigmaProfile::homogeneous(base, length);
      case SigmaKind::LinearIncreasing:
        return check_kind(SigmaProfile::linear(end0.value_or(lo), endL.value_or(hi), length));
      case SigmaKind::LinearDecreasing:
        return check_kind(SigmaProfile::linear(end0.value_or(hi), endL.value_or(lo), length));
      case SigmaKind::Quadratic:
        return check_kind(SigmaProfile::quadratic(end0.value_or(hi), vertex.value_or(lo),
                                                  endL.value_or(hi), length));
      case SigmaKind::ReversedQuadratic:
        return check_kind(SigmaProfile::quadratic(end0.value_or(lo), vertex.value_or(hi),
                                                  endL.value_or(lo), length));
      case SigmaKind::Custom:
        break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validation) throw;
    throw Error(ErrorCode::Validation, std::string("sigma: ") + e.what());
  }
  throw Error(ErrorCode::Validation, "sigma.kind: custom profiles cannot be set from a config file");
}

void ScenarioConfig::validate() const {
  params.validate();
  if (!mode) throw Error(ErrorCode::Validation, "mode: required");
  if (grid_n < 101) {
    throw Error(ErrorCode::Validation,
                "grid_n must be >= 101 (got " + std::to_string(grid_n) + ")");
  }
  if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(ErrorCode::Validation, "tol must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw Error(ErrorCode::Validation, "t_max must be > 0");
  }
  if (!(sigma.base > 0.0) || !std::isfinite(sigma.base)) {
    throw Error(ErrorCode::Validation, "sigma.base must be > 0");
  }
  if (workers < 1) throw Error(ErrorCode::Validation, "workers must be >= 1");
  if (*mode == ScenarioMode::SteadyEps && !(params.eps > 0.0)) {
    throw Error(ErrorCode::Validation, "eps: steady-eps mode needs eps > 0");
  }
  sigma.build(params.L);
}

// ---------------------------------------------------------------------------
// config text

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out)) {
    throw Error(ErrorCode::Validation, key + ": not a number: '" + value + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::Validation, key + ": not an integer: '" + value + "'");
  }
  return out;
}

std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : fmt_g(v, 17);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Validation,
                  "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw Error(ErrorCode::Validation, key + ": repeated key");

    auto& p = cfg.params;
    if (key == "c") p.c = parse_double(key, value);
    else if (key == "eps") p.eps = parse_double(key, value);
    else if (key == "L") p.L = parse_double(key, value);
    else if (key == "G_in") p.G_in = parse_double(key, value);
    else if (key == "a") p.a = parse_double(key, value);
    else if (key == "b") p.b = parse_double(key, value);
    else if (key == "d_i") p.d_i = parse_double(key, value);
    else if (key == "alpha1") p.alpha1 = parse_double(key, value);
    else if (key == "alpha2") p.alpha2 = parse_double(key, value);
    else if (key == "sigma.kind") cfg.sigma.kind = sigma_kind_from_string(value);
    else if (key == "sigma.base") cfg.sigma.base = parse_double(key, value);
    else if (key == "sigma.end0") cfg.sigma.end0 = parse_double(key, value);
    else if (key == "sigma.endL") cfg.sigma.endL = parse_double(key, value);
    else if (key == "sigma.vertex") cfg.sigma.vertex = parse_double(key, value);
    else if (key == "mode") cfg.mode = scenario_mode_from_string(value);
    else if (key == "grid_n") {
      const long long n = parse_int(key, value);
      if (n < 0 || n > 10'000'000) throw Error(ErrorCode::Validation, "grid_n: out of range");
      cfg.grid_n = static_cast<int>(n);
    } else if (key == "tol") cfg.tol = parse_double(key, value);
    else if (key == "t_max") cfg.t_max = parse_double(key, value);
    else throw Error(ErrorCode::Validation, "unknown config key '" + key + "'");
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string echo_config(const ScenarioConfig& config) {
  const auto& p = config.params;
  std::ostringstream out;
  out << "c = " << exact(p.c) << "\n"
      << "eps = " << exact(p.eps) << "\n"
      << "L = " << exact(p.L) << "\n"
      << "G_in = " << exact(p.G_in) << "\n"
      << "a = " << exact(p.a) << "\n"
      << "b = " << exact(p.b) << "\n"
      << "d_i = " << exact(p.d_i) << "\n"
      << "alpha1 = " << exact(p.alpha1) << "\n"
      << "alpha2 = " << exact(p.alpha2) << "\n"
      << "sigma.kind = " << to_string(config.sigma.kind) << "\n"
      << "sigma.base = " << exact(config.sigma.base) << "\n";
  if (config.sigma.end0) out << "sigma.end0 = " << exact(*config.sigma.end0) << "\n";
  if (config.sigma.endL) out << "sigma.endL = " << exact(*config.sigma.endL) << "\n";
  if (config.sigma.vertex) out << "sigma.vertex = " << exact(*config.sigma.vertex) << "\n";
  if (config.mode) out << "mode = " << to_string(*config.mode) << "\n";
  out << "grid_n = " << config.grid_n << "\n"
      << "tol = " << exact(config.tol) << "\n"
      << "t_max = " << exact(config.t_max) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// output helpers

std::string profile_csv(const std::vector<double>& x, const std::vector<double>& G,
                        const std::vector<double>& I) {
  std::string out = "x_cm,G_mM,I_pM\n";
  out.reserve(x.size() * 40);
  for (std::size_t j = 0; j < x.size(); ++j) {
    out += fmt_g(x[j], 10);
    out += ',';
    out += fmt_g(G[j], 10);
    out += ',';
    out += fmt_g(I[j], 10);
    out += '\n';
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

class Emitter {
 public:
  explicit Emitter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw Error(ErrorCode::Io, "cannot create output directory '" + dir_.string() + "'");
    }
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    files_[name] = sha256_hex(content);
  }

  std::vector<ManifestEntry> finish() {
    std::vector<ManifestEntry> entries;
    std::string text;
    for (const auto& [name, digest] : files_) {
      entries.push_back({name, digest});
      text += digest + "  " + name + "\n";
    }
    write("manifest.txt", text);
    return entries;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
};

class Stopwatch {
 public:
  explicit Stopwatch(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    sink_.emplace_back(stage, dt.count());
    return result;
  }

 private:
  std::vector<std::pair<std::string, double>>& sink_;
};

std::string plot_script(const std::vector<std::pair<std::string, std::string>>& csv_captions) {
  std::string s =
      "# Generated plot script; reads the CSV profiles listed below.\n"
      "import csv\n"
      "import matplotlib.pyplot as plt\n\n"
      "FIGURES = [\n";
  for (const auto& [file, caption] : csv_captions) {
    s += "    (\"" + file + "\", \"" + caption + "\"),\n";
  }
  s +=
      "]\n\n"
      "for name, caption in FIGURES:\n"
      "    with open(name) as fh:\n"
      "        rows = list(csv.DictReader(fh))\n"
      "    x = [float(r['x_cm']) for r in rows]\n"
      "    fig, (ax_g, ax_i) = plt.subplots(1, 2, figsize=(9, 3.5))\n"
      "    ax_g.plot(x, [float(r['G_mM']) for r in rows])\n"
      "    ax_g.set_xlabel('x [cm]')\n"
      "    ax_g.set_ylabel('G [mM]')\n"
      "    ax_i.plot(x, [float(r['I_pM']) for r in rows])\n"
      "    ax_i.set_xlabel('x [cm]')\n"
      "    ax_i.set_ylabel('I [pM]')\n"
      "    fig.suptitle(caption)\n"
      "    fig.tight_layout()\n"
      "    fig.savefig(name.replace('.csv', '.png'), dpi=120)\n";
  return s;
}

std::string caption_for(const std::string& catalog_name) {
  if (catalog_name == "homogeneous") return "homogeneous input";
  if (catalog_name == "linear_inc") return "increasing input";
  if (catalog_name == "linear_dec") return "decreasing linear input";
  if (catalog_name == "quadratic") return "a quadratic input";
  return "a reversed quadratic input";
}

double mean_over(const std::vector<double>& v, double h, double length) {
  return quad_trapz(v, h) / length;
}

std::string residuals_line(const SteadyProfile& prof) {
  return "[RESIDUALS] method=" + std::string(to_string(prof.method)) +
         " G=" + fmt_g(prof.residual_G, 6) + " I=" + fmt_g(prof.residual_I, 6) +
         " iterations=" + std::to_string(prof.iterations) + "\n";
}

template <typename T, typename F>
std::vector<T> parallel_map(std::size_t count, int workers, F&& f) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::string> errors(count);
  std::vector<ErrorCode> codes(count, ErrorCode::InvalidArgument);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i] = f(i);
      } catch (const Error& e) {
        errors[i] = e.what();
        codes[i] = e.code();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::vector<T> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (!slots[i]) throw Error(codes[i], errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::string remediation(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergence:
      return " (try a looser tol, a coarser grid_n, or continuation in L from a shorter vein)";
    case ErrorCode::Divergence:
      return " (the contraction hypothesis fails; use the shooting path)";
    case ErrorCode::IntegrationFailure:
    case ErrorCode::BlowUp:
      return " (reduce grid spacing or check parameter magnitudes)";
    default:
      return "";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// run

ScenarioResult run(const ScenarioConfig& config) {
  config.validate();
  ScenarioResult result;
  result.config = config;
  const ScenarioMode mode = *config.mode;
  const ModelParams& p = config.params;
  const SigmaProfile sigma = config.sigma.build(p.L);
  const Grid grid = Grid::with_nodes(p.L, config.grid_n);
  Stopwatch watch(result.timing);
  Emitter out(config.out_dir);

  std::ostringstream summary;
  summary << "panvein " << to_string(mode) << "\n";
  summary << "[CONFIG]\n" << echo_config(config) << "[/CONFIG]\n";

  ShootingOptions sopt;
  sopt.tol = config.tol;
  auto steady = [&](const ModelParams& q, const SigmaProfile& s) {
    return solve_shooting(q, s, Grid::with_nodes(q.L, config.grid_n), sopt);
  };

  try {
    switch (mode) {
      case ScenarioMode::Equilibrium: {
        const double level = sigma.is_constant() ? sigma.constant_value() : sigma.sup();
        const auto eq = watch.time("equilibrium", [&] { return find_equilibrium(p, level); });
        summary << "sigma = " << fmt_g(level, 10) << "\n"
                << "G_star_mM = " << fmt_g(eq.G_star, 10) << "\n"
                << "I_star_pM = " << fmt_g(eq.I_star, 10) << "\n"
                << "B = [[" << fmt_g(eq.B(0, 0), 8) << ", " << fmt_g(eq.B(0, 1), 8) << "], ["
                << fmt_g(eq.B(1, 0), 8) << ", " << fmt_g(eq.B(1, 1), 8) << "]]\n"
                << "lambda1 = " << fmt_g(eq.lambda1.real(), 8) << " + " << fmt_g(eq.lambda1.imag(), 8)
                << "i\n"
                << "lambda2 = " << fmt_g(eq.lambda2.real(), 8) << " + " << fmt_g(eq.lambda2.imag(), 8)
                << "i\n"
                << "envelope M = " << fmt_g(eq.M, 8) << " rho = " << fmt_g(eq.rho, 8) << "\n"
                << "bounds G_lower = " << fmt_g(eq.bounds.G_lower, 8)
                << " G_upper = " << fmt_g(eq.bounds.G_upper, 8)
                << " I_upper = " << fmt_g(eq.bounds.I_upper, 8) << "\n";
        break;
      }
      case ScenarioMode::Steady: {
        const auto prof = watch.time("shooting", [&] { return steady(p, sigma); });
        const auto compat = compatibility_residuals(prof, p, sigma);
        out.write("profile.csv", profile_csv(grid.nodes(), prof.G, prof.I));
        out.write("plot_profiles.py", plot_script({{"profile.csv", "steady profile"}}));
        summary << residuals_line(prof)
                << "compatibility res_G = " << fmt_g(compat.res_G, 6)
                << " res_I = " << fmt_g(compat.res_I, 6)
                << " (variants: growing exponent " << fmt_g(compat.res_G_growing, 6)
                << ", alpha1 in insulin " << fmt_g(compat.res_I_alpha1, 6) << ")\n"
                << "G(0) = " << fmt_g(prof.G.front(), 10) << " G(L) = " << fmt_g(prof.G.back(), 10)
                << "\nI(0) = " << fmt_g(prof.I.front(), 10) << " I(L) = " << fmt_g(prof.I.back(), 10)
                << "\nmean G = " << fmt_g(mean_over(prof.G, grid.spacing(), p.L), 10) << "\n"
                << "uniqueness length threshold = " << fmt_g(uniqueness_bound(p, sigma), 6) << "\n";
        if (sigma.is_constant()) {
          const auto cert = contraction_certificate(p, sigma.constant_value(), grid);
          summary << "certificate factor = " << fmt_g(cert.factor, 6)
                  << (cert.valid ? " valid r = " + fmt_g(cert.r, 6) : std::string(" invalid")) << "\n";
        }
        break;
      }
      case ScenarioMode::SteadyEps: {
        const auto base = watch.time("shooting", [&] { return steady(p, sigma); });
        CollocationOptions copt;
        copt.initial = base;
        const auto prof = watch.time("collocation", [&] {
          return solve_eps_collocation(p, sigma, p.eps, grid, copt);
        });
        out.write("profile.csv", profile_csv(grid.nodes(), prof.G, prof.I));
        out.write("plot_profiles.py", plot_script({{"profile.csv", "steady profile with diffusion"}}));
        double gap = 0.0;
        for (std::size_t j = 0; j < prof.G.size(); ++j) {
          gap = std::max({gap, std::abs(prof.G[j] - base.G[j]), std::abs(prof.I[j] - base.I[j])});
        }
        summary << "[RESIDUALS] method=collocation G=" << fmt_g(prof.residuals[0], 6)
                << " I=" << fmt_g(prof.residuals[1], 6) << " Gp=" << fmt_g(prof.residuals[2], 6)
                << " Ip=" << fmt_g(prof.residuals[3], 6)
                << " iterations=" << prof.iterations << "\n"
                << "sup distance to eps=0 profile = " << fmt_g(gap, 6) << "\n";
        break;
      }
      case ScenarioMode::Stability: {
        const auto prof = watch.time("shooting", [&] { return steady(p, sigma); });
        const auto rep = watch.time("stability", [&] { return analyze_stability(prof, p, sigma); });
        out.write("profile.csv", profile_csv(grid.nodes(), prof.G, prof.I));
        out.write("plot_profiles.py", plot_script({{"profile.csv", "steady profile"}}));
        const auto& b = rep.b_matrix;
        summary << residuals_line(prof)
                << "b_matrix = [[" << fmt_g(b(0, 0), 6) << ", " << fmt_g(b(0, 1), 6) << "], ["
                << fmt_g(b(1, 0), 6) << ", " << fmt_g(b(1, 1), 6) << "]]\n"
                << "commutator_gap = " << fmt_g(rep.commutator_gap, 6) << "\n"
                << "quadratic " << fmt_g(rep.quad_coeffs[0], 6) << " + (" << fmt_g(rep.quad_coeffs[1], 6)
                << ") L + (" << fmt_g(rep.quad_coeffs[2], 6) << ") L^2 = 0\n"
                << "[VERDICT] " << to_string(rep.verdict) << " roots=("
                << fmt_g(std::abs(rep.roots[0]), 6) << ", " << fmt_g(std::abs(rep.roots[1]), 6)
                << ") lead_re_per_min=" << fmt_g(rep.lead_re, 6) << "\n";
        break;
      }
      case ScenarioMode::Evolve: {
        SteadyProfile ref = watch.time("reference", [&] {
          if (p.eps > 0.0) {
            CollocationOptions copt;
            copt.initial = steady(p, sigma);
            return solve_eps_collocation(p, sigma, p.eps, grid, copt).as_steady();
          }
          return steady(p, sigma);
        });
        std::vector<double> G0 = ref.G, I0 = ref.I;
        for (auto& v : G0) v *= 1.01;
        for (auto& v : I0) v *= 1.01;
        RunOptions ropt;
        ropt.t_max = config.t_max;
        ropt.tol = 1e-12;
        const auto trace =
            watch.time("evolution", [&] { return run_to_steady(G0, I0, p, sigma, ref, ropt); });
        const Grid coarse = Grid::with_nodes(p.L, 201);
        const auto contraction = watch.time("semigroup", [&] {
          return semigroup_contraction_check(p, coarse, {1.0, 5.0, 10.0}, config.seed);
        });
        out.write("evolution_final.csv",
                  profile_csv(grid.nodes(), trace.final_state.G, trace.final_state.I));
        std::string tcsv = "t_min,sup_distance\n";
        for (std::size_t i = 0; i < trace.times.size(); ++i) {
          tcsv += fmt_g(trace.times[i], 10) + "," + fmt_g(trace.distances[i], 10) + "\n";
        }
        out.write("trace.csv", tcsv);
        out.write("plot_profiles.py", plot_script({{"evolution_final.csv", "state at t_max"}}));
        summary << "initial distance = " << fmt_g(trace.distances.front(), 6)
                << " final distance = " << fmt_g(trace.distances.back(), 6) << " ratio = "
                << fmt_g(trace.distances.back() / trace.distances.front(), 6) << "\n"
                << "fitted decay rate per min = " << fmt_g(fit_decay_rate(trace), 6) << "\n"
                << "non-increasing over final half = " << (non_increasing_tail(trace) ? "yes" : "no")
                << "\n"
                << "linear part max |u(t)|/|u(0)| = " << fmt_g(contraction.max_ratio, 8) << " over "
                << contraction.samples << " seeded fields\n";
        break;
      }
      case ScenarioMode::EpsSweep: {
        if (!sigma.is_constant()) {
          throw Error(ErrorCode::Validation, "sigma.kind: eps-sweep needs a homogeneous profile");
        }
        const std::vector<double> eps_list{1e-1, 1e-2, 1e-3, 1e-4};
        const auto table = watch.time("eps-sweep", [&] {
          return eps_sweep(p, sigma.constant_value(), eps_list, grid, EpsSolver::Block,
                           config.workers);
        });
        std::string csv = "eps,sup_gap,max_abs_slope,status\n";
        for (const auto& e : table.entries) {
          csv += fmt_g(e.eps, 10) + "," + fmt_g(e.gap, 10) + "," + fmt_g(e.max_slope, 10) + "," +
                 (e.ok ? "ok" : "failed") + "\n";
        }
        out.write("eps_sweep.csv", csv);
        summary << "fitted order = " << fmt_g(table.order, 6)
                << " monotone = " << (table.monotone ? "yes" : "no") << "\n";
        for (const auto& e : table.entries) {
          if (!e.ok) summary << "eps " << fmt_g(e.eps, 6) << " failed: " << e.error << "\n";
        }
        break;
      }
      case ScenarioMode::VelocitySweep: {
        const std::vector<double> speeds{0.5, 3.0, 4.2, 9.0};
        const auto profiles = watch.time("velocity-sweep", [&] {
          return parallel_map<SteadyProfile>(speeds.size(), config.workers, [&](std::size_t i) {
            ModelParams q = p;
            q.c = speeds[i];
            return steady(q, sigma);
          });
        });
        std::string table = "c_cm_per_min,mean_G_mM,I0_pM,IL_pM\n";
        std::vector<std::pair<std::string, std::string>> figures;
        for (std::size_t i = 0; i < speeds.size(); ++i) {
          const auto& prof = profiles[i];
          const std::string name = "velocity_c" + fmt_g(speeds[i], 6) + ".csv";
          out.write(name, profile_csv(grid.nodes(), prof.G, prof.I));
          figures.emplace_back(name, "c = " + fmt_g(speeds[i], 6) + " cm/min");
          const double meanG = mean_over(prof.G, grid.spacing(), p.L);
          table += fmt_g(speeds[i], 10) + "," + fmt_g(meanG, 10) + "," +
                   fmt_g(prof.I.front(), 10) + "," + fmt_g(prof.I.back(), 10) + "\n";
          summary << residuals_line(prof);
        }
        out.write("velocity_sweep.csv", table);
        out.write("plot_profiles.py", plot_script(figures));
        break;
      }
      case ScenarioMode::SigmaCatalog: {
        const auto catalog = SigmaProfile::catalog(config.sigma.base, p.L);
        const auto profiles = watch.time("sigma-catalog", [&] {
          return parallel_map<SteadyProfile>(catalog.size(), config.workers, [&](std::size_t i) {
            return steady(p, catalog[i].second);
          });
        });
        std::vector<std::pair<std::string, std::string>> figures;
        for (std::size_t i = 0; i < catalog.size(); ++i) {
          const std::string name = "sigma_" + catalog[i].first + ".csv";
          out.write(name, profile_csv(grid.nodes(), profiles[i].G, profiles[i].I));
          figures.emplace_back(name, caption_for(catalog[i].first));
          summary << catalog[i].first << " ";
          summary << residuals_line(profiles[i]);
        }
        out.write("plot_profiles.py", plot_script(figures));
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validation || e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), std::string("mode '") + to_string(mode) + "': " + e.what() +
                              remediation(e.code()));
  }

  result.summary = summary.str();
  out.write("summary.txt", result.summary);
  result.manifest = out.finish();
  return result;
}

}  // namespace panvein
