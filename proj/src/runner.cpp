#include "coxperc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "coxperc/cox.hpp"
#include "coxperc/rng.hpp"
#include "coxperc/svg.hpp"

namespace coxperc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void WriteFile(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::kConfig, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorKind::kConfig, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::optional<json> ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

json RowToJson(const ResultRow& row) {
  const auto& e = row.estimate;
  return json{{"series", row.series},  {"lambda", row.lambda},     {"r", row.r},
              {"K", row.K},            {"mean", e.mean},            {"se", e.std_error},
              {"n", e.replicates},     {"weight_sum", e.effective_weight_sum},
              {"seed", e.seed},        {"flagged", e.flagged}};
}

ResultRow RowFromJson(const json& j) {
  ResultRow row;
  row.series = j.at("series").get<std::string>();
  row.lambda = j.at("lambda").get<double>();
  row.r = j.at("r").get<double>();
  row.K = j.at("K").get<double>();
  row.estimate.mean = j.at("mean").get<double>();
  row.estimate.std_error = j.at("se").get<double>();
  row.estimate.replicates = j.at("n").get<int>();
  row.estimate.effective_weight_sum = j.at("weight_sum").get<double>();
  row.estimate.seed = j.at("seed").get<std::uint64_t>();
  row.estimate.flagged = j.at("flagged").get<bool>();
  return row;
}

struct Task {
  std::string id;
  std::function<std::vector<ResultRow>()> run;
};

std::vector<ResultRow> StabRows(const MeasureSpec& spec, double n, int replicates, std::uint64_t seed) {
  const StabDiagnostics d = DiagnoseStabilization(spec, n, replicates, seed);
  EstimateWithCI emp;
  emp.mean = d.empirical_prob;
  emp.std_error = d.std_error;
  emp.replicates = d.replicates;
  emp.effective_weight_sum = d.replicates;
  emp.seed = seed;
  EstimateWithCI bound = emp;
  bound.mean = d.theory_bound;
  bound.std_error = 0.0;
  return {{spec.Kind() + ":stab", 0.0, 0.0, n, emp}, {spec.Kind() + ":stab-bound", 0.0, 0.0, n, bound}};
}

std::vector<Task> BuildTasks(const RunConfig& cfg, const MeasureSpec& spec, std::vector<std::string>& notes) {
  std::vector<Task> tasks;
  const int reps = cfg.replicates;
  const int workers = cfg.workers;
  const std::uint64_t seed = cfg.seed;
  const std::string& x = cfg.experiment;
  if (x == "sweep") {
    for (std::size_t i = 0; i < cfg.r.size(); ++i) {
      const double r = cfg.r[i];
      const std::vector<double> grid = cfg.LambdaGridFor(i);
      tasks.push_back({"sweep r=" + FormatDouble(r), [=, &notes] {
                         const double lmax = *std::max_element(grid.begin(), grid.end());
                         const double lmin = *std::min_element(grid.begin(), grid.end());
                         const CoupledSample sample =
                             SampleCoupledCox(spec, lmax, r, cfg.K, reps, ParameterSeed(seed, r), workers);
                         std::vector<ResultRow> rows;
                         for (double l : grid) rows.push_back({spec.Kind(), l, r, cfg.K, ThetaAt(sample, l)});
                         if (cfg.theta0 && lmax > lmin) {
                           try {
                             const ThresholdResult t = FindLambdaThreshold(sample, *cfg.theta0, lmin, lmax);
                             EstimateWithCI e;
                             e.mean = *cfg.theta0;
                             e.std_error = 0.5 * (t.hi - t.lo);
                             e.replicates = reps;
                             e.effective_weight_sum = reps;
                             e.seed = sample.seed;
                             e.flagged = t.flagged;
                             rows.push_back({spec.Kind() + ":threshold", t.lambda, r, cfg.K, e});
                           } catch (const Error& err) {
                             notes.push_back("threshold at r=" + FormatDouble(r) + ": " + err.what());
                           }
                         }
                         return rows;
                       }});
    }
  } else if (x == "limit-large-r") {
    tasks.push_back({"reference", [=] {
                       const EstimateWithCI ref = EstimateThetaPoisson(
                           cfg.rho, cfg.K, reps, StreamKey({seed, Tag(Stream::kPoisson)}), workers, spec.dim);
                       return std::vector<ResultRow>{{"poisson", cfg.rho, 1.0, cfg.K, ref}};
                     }});
    for (double r : cfg.r) {
      tasks.push_back({"large-r r=" + FormatDouble(r), [=] {
                         const double lambda = cfg.rho / std::pow(r, spec.dim);
                         const EstimateWithCI est =
                             EstimateTheta(spec, lambda, r, cfg.K * r, reps, ParameterSeed(seed, r), workers);
                         return std::vector<ResultRow>{{spec.Kind(), lambda, r, cfg.K * r, est}};
                       }});
    }
  } else if (x == "limit-singular") {
    for (double lambda : cfg.lambda) {
      tasks.push_back({"singular lambda=" + FormatDouble(lambda), [=] {
                         const double grid[] = {lambda};
                         return CoupledLimitSingular(spec, cfg.c, grid, cfg.K, reps, seed, workers).rows;
                       }});
    }
  } else if (x == "limit-ac") {
    tasks.push_back({"ac", [=] { return CoupledLimitAc(spec, cfg.rho, cfg.lambda, cfg.K, reps, seed, workers).rows; }});
  } else if (x == "diagnose-stab") {
    for (double n : cfg.n) {
      tasks.push_back({"stab n=" + FormatDouble(n), [=] { return StabRows(spec, n, reps, ParameterSeed(seed, n)); }});
    }
  } else if (x == "calibrate") {
    tasks.push_back({"calibrate", [=] {
                       const MassCalibration m =
                           CalibrateMeanMass(spec, cfg.calibration_replicates, spec.FamilyHash(), cfg.calibration_window);
                       EstimateWithCI e;
                       e.mean = m.mean;
                       e.std_error = m.std_error;
                       e.replicates = m.replicates;
                       e.effective_weight_sum = m.replicates;
                       e.seed = spec.FamilyHash();
                       return std::vector<ResultRow>{{spec.Kind() + ":mass", 0.0, 0.0, cfg.calibration_window, e}};
                     }});
  }
  return tasks;
}

// Large-radius deviation rows are derived from the reference and the
// per-radius rows once all are present.
void AppendDerivedRows(const RunConfig& cfg, std::vector<ResultRow>& rows) {
  if (cfg.experiment != "limit-large-r") return;
  const auto ref = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.series == "poisson"; });
  if (ref == rows.end()) return;
  const EstimateWithCI reference = ref->estimate;
  std::vector<ResultRow> extra;
  for (const ResultRow& row : rows) {
    if (row.series == "poisson") continue;
    ResultRow dev = row;
    dev.series += ":deviation";
    dev.estimate.mean = std::abs(row.estimate.mean - reference.mean);
    dev.estimate.std_error = CombinedSe(row.estimate, reference);
    extra.push_back(dev);
  }
  rows.insert(rows.end(), extra.begin(), extra.end());
}

std::vector<CurveSeries> CurvesFor(const RunConfig& cfg, const std::vector<ResultRow>& rows, std::string& x_label) {
  std::map<std::string, CurveSeries> by_label;
  std::vector<std::string> order;
  x_label = "lambda";
  for (const ResultRow& row : rows) {
    std::string label = row.series;
    double xv = row.lambda;
    if (cfg.experiment == "sweep") {
      if (row.series.find(":threshold") != std::string::npos) continue;
      label += " r=" + FormatDouble(row.r);
    } else if (cfg.experiment == "limit-large-r") {
      xv = row.r;
      x_label = "r";
    } else if (cfg.experiment == "diagnose-stab") {
      xv = row.K;
      x_label = "n";
    }
    auto [it, inserted] = by_label.try_emplace(label);
    if (inserted) {
      it->second.label = label;
      order.push_back(label);
    }
    it->second.x.push_back(xv);
    it->second.y.push_back(row.estimate.mean);
    it->second.se.push_back(row.estimate.std_error);
  }
  std::vector<CurveSeries> out;
  for (const auto& label : order) out.push_back(by_label[label]);
  return out;
}

json CalibrationJson(const CalibrationRecord& c) {
  json j{{"kind", c.kind},           {"family_hash", c.family_hash}, {"method", c.method},
         {"raw_mean", c.raw_mean},   {"std_error", c.std_error},     {"replicates", c.replicates},
         {"window", c.window},       {"normalization", c.normalization}};
  j["analytic"] = c.analytic ? json(*c.analytic) : json(nullptr);
  return j;
}

}  // namespace

std::pair<MeasureSpec, CalibrationRecord> ResolveSpec(const RunConfig& config, const std::string& sidecar_path) {
  MeasureSpec spec = config.spec;
  CalibrationRecord rec;
  rec.kind = spec.Kind();
  rec.family_hash = Hex(spec.FamilyHash());
  MeasureSpec raw = spec;
  raw.normalization = 1.0;
  rec.analytic = AnalyticMeanMass(raw);
  if (!config.target_mass) {
    rec.method = "given";
    rec.normalization = spec.normalization;
    rec.raw_mean = rec.analytic.value_or(0.0);
    return {spec, rec};
  }
  if (!spec.IsSingular()) {
    rec.method = "exact";
    rec.raw_mean = *rec.analytic;
  } else {
    json sidecar = ReadJson(sidecar_path).value_or(json::object());
    const json* cached = nullptr;
    if (sidecar.contains(rec.family_hash)) {
      const json& c = sidecar[rec.family_hash];
      if (c.value("replicates", 0) == config.calibration_replicates &&
          c.value("window", 0.0) == config.calibration_window) {
        cached = &c;
      }
    }
    if (cached) {
      rec.raw_mean = cached->at("raw_mean").get<double>();
      rec.std_error = cached->at("std_error").get<double>();
    } else {
      const MassCalibration m =
          CalibrateMeanMass(raw, config.calibration_replicates, raw.FamilyHash(), config.calibration_window);
      rec.raw_mean = m.mean;
      rec.std_error = m.std_error;
      sidecar[rec.family_hash] = json{{"kind", rec.kind},
                                      {"raw_mean", m.mean},
                                      {"std_error", m.std_error},
                                      {"replicates", config.calibration_replicates},
                                      {"window", config.calibration_window}};
      WriteFile(sidecar_path, sidecar.dump(2) + "\n");
    }
    rec.method = "monte-carlo";
    rec.replicates = config.calibration_replicates;
    rec.window = config.calibration_window;
  }
  if (!(rec.raw_mean > 0.0)) throw Error(ErrorKind::kUndefinedEstimate, "raw mean mass is zero; cannot normalize");
  spec = WithTargetMass(raw, *config.target_mass, rec.raw_mean);
  rec.normalization = spec.normalization;
  return {spec, rec};
}

std::string ResultsCsv(const std::vector<ResultRow>& rows) {
  std::string out = "spec,lambda,r,K,mean,se,n,seed\n";
  for (const ResultRow& row : rows) {
    out += row.series + "," + FormatDouble(row.lambda) + "," + FormatDouble(row.r) + "," + FormatDouble(row.K) + "," +
           FormatDouble(row.estimate.mean) + "," + FormatDouble(row.estimate.std_error) + "," +
           std::to_string(row.estimate.replicates) + "," + std::to_string(row.estimate.seed) + "\n";
  }
  return out;
}

int Run(const RunConfig& config, const RunOptions& options) {
  std::ostream& log = options.log ? *options.log : std::cerr;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(config.output);
  json manifest;
  manifest["tool"] = "coxperc";
  manifest["version"] = kToolVersion;
  manifest["experiment"] = config.experiment;
  manifest["config_hash"] = ConfigHash(config);
  manifest["config"] = SerializeConfig(config);
  manifest["seed"] = config.seed;
  manifest["workers"] = config.workers;
  std::vector<std::string> notes;

  try {
    fs::create_directories(dir);
    const auto [spec, calibration] = ResolveSpec(config, (dir / "calibration.json").string());
    manifest["calibration"] = CalibrationJson(calibration);

    const std::vector<Task> tasks = BuildTasks(config, spec, notes);
    const fs::path checkpoint_path = dir / "checkpoint.json";
    json checkpoint{{"config_hash", ConfigHash(config)}, {"tasks", json::object()}};
    if (auto old = ReadJson(checkpoint_path); old && old->value("config_hash", "") == ConfigHash(config)) {
      checkpoint = *old;
      log << "resuming from checkpoint (" << checkpoint["tasks"].size() << " grid points done)\n";
    }

    std::vector<ResultRow> rows;
    std::size_t completed = 0;
    bool interrupted = false;
    for (const Task& task : tasks) {
      if (checkpoint["tasks"].contains(task.id)) {
        for (const json& j : checkpoint["tasks"][task.id]) rows.push_back(RowFromJson(j));
        ++completed;
        continue;
      }
      if (options.interrupt && options.interrupt->load()) {
        interrupted = true;
        break;
      }
      log << "running " << task.id << "\n";
      const std::vector<ResultRow> task_rows = task.run();
      json saved = json::array();
      for (const ResultRow& row : task_rows) saved.push_back(RowToJson(row));
      checkpoint["tasks"][task.id] = saved;
      WriteFile(checkpoint_path, checkpoint.dump() + "\n");
      rows.insert(rows.end(), task_rows.begin(), task_rows.end());
      ++completed;
    }
    if (!interrupted) AppendDerivedRows(config, rows);

    WriteFile(dir / "results.csv", ResultsCsv(rows));
    std::string x_label;
    const auto curves = CurvesFor(config, rows, x_label);
    WriteFile(dir / "curves.svg", CurvesSvg(curves, config.experiment + " (" + spec.Kind() + ")", x_label,
                                            config.experiment == "calibrate" ? "mass" : "estimate"));
    if (options.snapshot) {
      const double side = config.K;
      const MeasureRealization real =
          SampleMeasure(spec, BoxWindow::Centered(side, spec.dim), StreamKey({config.seed, Tag(Stream::kDiagnostic)}));
      std::vector<double> grid = config.lambda;
      std::sort(grid.begin(), grid.end());
      const double lambda = grid.empty() ? 1.0 : grid[grid.size() / 2];
      const PointPattern pattern = SampleCox(real, lambda, config.seed);
      WriteFile(dir / "snapshot.svg", SnapshotSvg(real, pattern));
    }

    manifest["status"] = interrupted ? "partial" : "complete";
    manifest["completed_grid_points"] = completed;
    manifest["total_grid_points"] = tasks.size();
    manifest["notes"] = notes;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
    if (interrupted) {
      log << "interrupted: partial results written, checkpoint kept\n";
      return kExitRuntime;
    }
    fs::remove(checkpoint_path);
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    try {
      manifest["status"] = "failed";
      manifest["error"] = e.what();
      manifest["notes"] = notes;
      fs::create_directories(dir);
      WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
    }
    return kExitRuntime;
  }
}

}  // namespace coxperc
