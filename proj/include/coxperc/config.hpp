#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coxperc/measures.hpp"

namespace coxperc {

/// Run configuration. Text format: flat INI sections [run], [measure],
/// [grid]; `key = value`, lists comma separated, `#` starts a comment.
struct RunConfig {
  std::string experiment = "sweep";
  std::uint64_t seed = 0;
  int replicates = 200;
  int workers = 1;
  std::string output = "out";

  /// Raw family; `normalization` is used as given unless target_mass is
  /// set, in which case it is resolved by calibration.
  MeasureSpec spec;
  std::optional<double> target_mass;
  int calibration_replicates = 200;
  double calibration_window = 10.0;

  std::vector<double> lambda;
  /// Optional per-radius lambda grids, keyed by 1-based index into `r`.
  std::map<int, std::vector<double>> lambda_for_r;
  std::vector<double> r;
  double K = 10.0;
  double c = 0.25;
  double rho = 1.8;
  std::vector<double> n;
  std::optional<double> theta0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Lambda grid used at radius index i (0-based).
  const std::vector<double>& LambdaGridFor(std::size_t i) const;
};

inline const char* const kExperiments[] = {"sweep",      "limit-large-r", "limit-singular",
                                           "limit-ac",   "diagnose-stab", "calibrate"};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;
};

/// Parses and validates; every problem found is reported.
ParseResult ParseConfig(const std::string& text);

/// Canonical text; ParseConfig(SerializeConfig(c)) yields c.
std::string SerializeConfig(const RunConfig& config);

/// Semantic checks on an assembled config (grids, ranges, experiment).
std::vector<std::string> ValidateConfig(const RunConfig& config);

/// Shortest round-trip decimal form.
std::string FormatDouble(double v);

/// FNV-1a of the canonical text (workers and output excluded), 16 hex
/// digits.
std::string ConfigHash(const RunConfig& config);

}  // namespace coxperc
