#pragma once

#include <atomic>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coxperc/config.hpp"
#include "coxperc/experiments.hpp"

namespace coxperc {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

struct RunOptions {
  bool snapshot = false;
  /// Polled between grid points; when set the run stops, writes what it has
  /// and keeps the checkpoint.
  const std::atomic<bool>* interrupt = nullptr;
  std::ostream* log = nullptr;
};

/// Normalization constant in use and how it was obtained.
struct CalibrationRecord {
  std::string kind;
  std::string family_hash;
  std::string method;  // given, exact, monte-carlo
  double raw_mean = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  double window = 0.0;
  std::optional<double> analytic;
  double normalization = 1.0;
};

/// Resolves target_mass into a normalization. Monte Carlo constants for
/// tessellation families are read from / written to `sidecar_path`.
std::pair<MeasureSpec, CalibrationRecord> ResolveSpec(const RunConfig& config, const std::string& sidecar_path);

/// CSV with header spec,lambda,r,K,mean,se,n,seed.
std::string ResultsCsv(const std::vector<ResultRow>& rows);

/// Runs the configured experiment and writes results.csv, manifest.json,
/// curves.svg (and snapshot.svg on request) into config.output. Returns an
/// ExitCode.
int Run(const RunConfig& config, const RunOptions& options = {});

}  // namespace coxperc
