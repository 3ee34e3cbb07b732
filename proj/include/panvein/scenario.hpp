#pragma once

// Scenario configuration, dispatch to the solvers and artifact emission.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "panvein/model.hpp"

namespace panvein {

enum class ScenarioMode {
  Equilibrium,
  Steady,
  SteadyEps,
  Stability,
  Evolve,
  EpsSweep,
  VelocitySweep,
  SigmaCatalog,
};

const char* to_string(ScenarioMode mode) noexcept;
/// Throws Error(Validation) for unknown names.
ScenarioMode scenario_mode_from_string(const std::string& name);

struct SigmaSpec {
  SigmaKind kind = SigmaKind::Homogeneous;
  double base = 15.0;
  std::optional<double> end0, endL, vertex;

  /// Missing shape values follow the catalog shapes around `base`.
  SigmaProfile build(double length) const;
  bool operator==(const SigmaSpec&) const = default;
};

struct ScenarioConfig {
  ModelParams params;
  SigmaSpec sigma;
  std::optional<ScenarioMode> mode;
  int grid_n = 1501;
  double tol = 1e-9;
  double t_max = 500.0;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int workers = 1;

  /// Throws Error(Validation) with the offending field path.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// `key = value` lines; `#` starts a comment. Unknown or repeated keys are
/// rejected. Missing keys keep their defaults.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Config text that parses back to the same values.
std::string echo_config(const ScenarioConfig& config);

struct ManifestEntry {
  std::string file;
  std::string sha256;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::string summary;
  std::vector<ManifestEntry> manifest;
  std::vector<std::pair<std::string, double>> timing;  ///< stage, seconds
};

/// Runs the configured mode and writes CSVs, summary.txt, a plot script and
/// manifest.txt into config.out_dir.
ScenarioResult run(const ScenarioConfig& config);

/// CSV with header x_cm,G_mM,I_pM and 10 significant digits.
std::string profile_csv(const std::vector<double>& x, const std::vector<double>& G,
                        const std::vector<double>& I);

std::string sha256_hex(const std::string& bytes);

}  // namespace panvein
