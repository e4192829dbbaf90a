// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance,
// replicate count and seed used for a verdict is fixed in this file.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "coxperc/config.hpp"
#include "coxperc/cox.hpp"
#include "coxperc/experiments.hpp"
#include "coxperc/percolation.hpp"
#include "coxperc/rng.hpp"
#include "coxperc/runner.hpp"

using namespace coxperc;
namespace fs = std::filesystem;

namespace {

int g_workers = 1;
std::string g_cli;
fs::path g_scratch;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string Num(double v) { return Fmt("%.4g", v); }

MeasureSpec Spec(MeasureFamily f, double normalization = 1.0) {
  MeasureSpec s;
  s.family = f;
  s.normalization = normalization;
  return s;
}

// Length intensity 1 for the planar tessellations.
MeasureSpec UnitVoronoi() { return Spec(VoronoiEdges{1.0}, 0.5); }
MeasureSpec UnitDelaunay() { return Spec(DelaunayEdges{1.0}, 3.0 * std::numbers::pi / 32.0); }
MeasureSpec UnitLines() { return Spec(PoissonLines{1.0}); }

// ---------------------------------------------------------------------------
// 1. Gilbert components against breadth-first search.

std::vector<int> BfsLabels(const std::vector<Point>& pts, double r) {
  std::vector<int> label(pts.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (label[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (label[j] < 0 && Distance(pts[i], pts[j]) < r) {
          label[j] = next;
          q.push(j);
        }
      }
    }
    ++next;
  }
  return label;
}

Verdict Criterion1() {
  int mismatches = 0;
  std::size_t largest = 0;
  for (int k = 0; k < 100; ++k) {
    Rng rng({2024, static_cast<std::uint64_t>(k)});
    const int dim = k % 2 == 0 ? 2 : 3;
    const std::size_t n = 1 + static_cast<std::size_t>(rng.Uniform() * 500.0);
    const double side = 10.0;
    const double r = rng.Uniform(0.2, dim == 2 ? 1.2 : 2.0);
    std::vector<Point> pts(n);
    for (Point& p : pts) {
      p.x = rng.Uniform(-side / 2, side / 2);
      p.y = rng.Uniform(-side / 2, side / 2);
      if (dim == 3) p.z = rng.Uniform(-side / 2, side / 2);
    }
    const GilbertGraph g = BuildGilbert(pts, r);
    const auto bfs = BfsLabels(pts, r);
    // Same partition iff the label maps are bijective.
    std::set<std::pair<int, std::uint32_t>> pairs;
    std::set<int> a;
    std::set<std::uint32_t> b;
    for (std::size_t i = 0; i < n; ++i) {
      pairs.insert({bfs[i], g.label[i]});
      a.insert(bfs[i]);
      b.insert(g.label[i]);
    }
    if (pairs.size() != a.size() || pairs.size() != b.size() || a.size() != g.components) ++mismatches;
    largest = std::max(largest, n);
  }
  return {mismatches == 0, "100 patterns, n <= " + std::to_string(largest) + ", mismatches " + std::to_string(mismatches)};
}

// ---------------------------------------------------------------------------
// 2. Constant measure against the homogeneous Poisson process.

Verdict Criterion2() {
  const int reps = 10000;
  const double K = 10.0, r = 1.0, lmax = 1.6;
  const CoupledSample cox = SampleCoupledCox(Spec(ConstantLebesgue{1.0}), lmax, r, K, reps, 201, g_workers);
  const CoupledSample poi = SampleCoupledPoisson(lmax, K, reps, 202, g_workers, 2, r);
  bool pass = true;
  std::string detail;
  for (double l : {0.8, 1.0, 1.2, 1.4, 1.6}) {
    const EstimateWithCI a = ThetaAt(cox, l), b = ThetaAt(poi, l);
    const double z = std::abs(a.mean - b.mean) / CombinedSe(a, b);
    pass = pass && z <= 3.0;
    detail += " l=" + Num(l) + ":" + Num(a.mean) + "/" + Num(b.mean) + "(z=" + Fmt("%.2f", z) + ")";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 3. Palm mass of the unit box against the size-biased second moment.

Verdict Criterion3() {
  const int reps = 5000;
  bool pass = true;
  std::string detail;
  const MeasureSpec specs[] = {Spec(VoronoiEdges{100.0}), Spec(ShotNoise{0.1, 3.1831, 200.0})};
  for (const MeasureSpec& spec : specs) {
    const std::size_t n = reps;
    std::vector<double> pw(n), py(n), dw(n), dy(n);
    const BoxWindow unit = BoxWindow::Centered(1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const PalmEnvironment env = SamplePalmEnvironment(spec, 1.0, StreamKey({301, i}));
      pw[i] = env.draw.weight;
      py[i] = env.draw.shift ? MeasureOfBox(env.real, unit.Translated(*env.draw.shift)) : 0.0;
      const MeasureRealization real = SampleMeasure(spec, unit, StreamKey({302, i}));
      dw[i] = dy[i] = MeasureOfBox(real, unit);
    }
    const EstimateWithCI palm = WeightedRatioEstimate(pw, py, 301);
    const EstimateWithCI direct = WeightedRatioEstimate(dw, dy, 302);
    const double z = std::abs(palm.mean - direct.mean) / CombinedSe(palm, direct);
    pass = pass && z <= 3.0;
    detail += " " + spec.Kind() + ": palm " + Num(palm.mean) + " direct " + Num(direct.mean) + " (z=" + Fmt("%.2f", z) + ")";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 4. Shot-noise Laplace rate against the closed form.

Verdict Criterion4() {
  const double R = 1.0, h = 1.0;
  const double kernel_integral = h * std::numbers::pi * R * R;
  const double r = 20.0 * R;
  bool pass = true;
  std::string detail;
  const std::pair<double, double> pairs[] = {{0.0125, 0.5}, {0.025, 0.25}};
  for (const auto& [center_intensity, lk] : pairs) {
    const double lambda = lk / kernel_integral;
    const LaplaceResult res =
        LaplaceTransform(Spec(ShotNoise{R, h, center_intensity}), lambda, r, 20000, 401, g_workers);
    const double closed = ShotNoiseRateClosedForm(center_intensity, lambda, kernel_integral);
    const double rel = std::abs(res.rate / closed - 1.0);
    pass = pass && rel <= 0.05;
    detail += " lS=" + Num(center_intensity) + ",lK=" + Num(lk) + ": " + Fmt("%.5f", res.rate) + " vs " +
              Fmt("%.5f", closed) + " (rel " + Fmt("%.3f", rel) + ")";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. Isolation lower bound on a 3x3 grid.

Verdict Criterion5() {
  const MeasureSpec spec = UnitVoronoi();
  const double K = 10.0;
  bool pass = true;
  std::string detail;
  double worst = -1e300;
  for (double r : {0.5, 1.0, 2.0}) {
    const CoupledSample sample = SampleCoupledCox(spec, 4.0, r, K, 1000, ParameterSeed(501, r), g_workers);
    for (double l : {1.0, 2.0, 4.0}) {
      const EstimateWithCI theta = ThetaAt(sample, l);
      const EstimateWithCI iso = IsolationLowerBound(spec, l, r, 2000, ParameterSeed(ParameterSeed(502, r), l), g_workers);
      const double margin = (1.0 - theta.mean) - (iso.mean - 3.0 * CombinedSe(theta, iso));
      worst = std::max(worst, -margin);
      pass = pass && margin >= 0.0;
      detail += " (" + Num(l) + "," + Num(r) + "):" + Num(1.0 - theta.mean) + ">=" + Num(iso.mean);
    }
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 6. Large-radius universality.

Verdict Criterion6() {
  const double K = 10.0;
  const CoupledSample poisson = SampleCoupledPoisson(2.0, K, 20000, 601, g_workers, 2, 1.0);
  const ThresholdResult target = FindLambdaThreshold(poisson, 0.7, 0.5, 2.0);
  const double rho = target.lambda;
  std::string detail = " rho=" + Fmt("%.4f", rho) + " (rho_c " + Num(PoissonCriticalIntensity(2)) + ")";
  bool pass = true;
  const std::vector<double> rs{1.0, 2.0, 4.0};
  const std::pair<MeasureSpec, int> families[] = {{UnitVoronoi(), 3000}, {UnitDelaunay(), 3000}, {UnitLines(), 40000}};
  for (const auto& [spec, reps] : families) {
    const ExperimentResult res = CoupledLimitLargeRadius(spec, rho, rs, K, reps, 602, g_workers);
    std::vector<EstimateWithCI> dev;
    for (const ResultRow& row : res.rows) {
      if (row.series == spec.Kind() + ":deviation") dev.push_back(row.estimate);
    }
    bool ok = dev.size() == rs.size();
    for (std::size_t i = 1; ok && i < dev.size(); ++i) ok = dev[i].mean <= dev[i - 1].mean;
    ok = ok && dev.back().mean <= 3.0 * dev.back().std_error;
    pass = pass && ok;
    detail += " " + spec.Kind() + (ok ? "[ok]" : "[fail]") + ":";
    for (const auto& d : dev) detail += " " + Fmt("%.4f", d.mean) + "+-" + Fmt("%.4f", d.std_error);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Singular coupled limit.

Verdict Criterion7() {
  const double c = 0.5;
  bool pass = true;
  std::string detail;

  // Survival frequencies of realized Voronoi edges against the bracket.
  const MeasureRealization real = SampleMeasure(Spec(VoronoiEdges{1.0}), BoxWindow::Centered(10.0), 701);
  std::vector<double> lengths;
  for (const auto& e : real.segments->edges) {
    if (lengths.size() == 12) break;
    if (e.seg.length > 0.05) lengths.push_back(e.seg.length);
  }
  int outside = 0;
  for (double lambda : {50.0, 100.0}) {
    const double r = std::log(lambda / c) / lambda;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      const BondEstimate f = EdgeSurvivalFrequency(lengths[k], lambda, r, 4000, StreamKey({702, k}));
      const auto [lo, hi] = GapBracket(lengths[k], lambda, r);
      if (f.mean < lo - 3.0 * f.std_error || f.mean > hi + 3.0 * f.std_error) ++outside;
    }
  }
  pass = outside == 0;
  detail += " bracket: " + std::to_string(2 * lengths.size() - outside) + "/" + std::to_string(2 * lengths.size()) + " inside;";

  const std::vector<double> ls{10.0, 20.0, 40.0, 80.0, 160.0};
  const ExperimentResult res = CoupledLimitSingular(Spec(VoronoiEdges{1.0}), c, ls, 10.0, 2000, 703, g_workers);
  std::vector<EstimateWithCI> gap;
  for (const ResultRow& row : res.rows) {
    if (row.series == "voronoi:cox-ber") gap.push_back(row.estimate);
  }
  bool shrink = true;
  for (std::size_t i = 1; i < gap.size(); ++i) shrink = shrink && std::abs(gap[i].mean) <= std::abs(gap[i - 1].mean);
  const bool final_ok = std::abs(gap.back().mean) <= 3.0 * gap.back().std_error;
  pass = pass && shrink && final_ok;
  detail += " |cox-ber|:";
  for (const auto& g : gap) detail += " " + Fmt("%.4f", std::abs(g.mean));
  detail += " final se " + Fmt("%.4f", gap.back().std_error);
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 8. Voronoi against Delaunay at length intensity 20.

Verdict Criterion8() {
  const double K = 5.0;
  const int reps = 3000;
  const MeasureSpec vor = Spec(VoronoiEdges{100.0});
  const MeasureSpec del = Spec(DelaunayEdges{34.699});
  struct Radius {
    double r;
    double lambda_max;
  };
  const Radius radii[] = {{0.075, 20.0}, {0.225, 2.4}, {0.475, 0.6}};
  bool pass = true;
  bool monotone = true;
  std::string detail;
  for (const Radius& rad : radii) {
    const CoupledSample a = SampleCoupledCox(vor, rad.lambda_max, rad.r, K, reps, ParameterSeed(801, rad.r), g_workers);
    const CoupledSample b = SampleCoupledCox(del, rad.lambda_max, rad.r, K, reps, ParameterSeed(802, rad.r), g_workers);
    double max_diff = 0.0, prev_a = -1.0, prev_b = -1.0;
    for (int i = 1; i <= 24; ++i) {
      const double l = rad.lambda_max * i / 24.0;
      const double ta = ThetaAt(a, l).mean, tb = ThetaAt(b, l).mean;
      monotone = monotone && ta >= prev_a && tb >= prev_b;
      prev_a = ta;
      prev_b = tb;
      max_diff = std::max(max_diff, std::abs(ta - tb));
    }
    if (rad.r == 0.475) pass = pass && max_diff <= 0.05;
    if (rad.r == 0.075) pass = pass && max_diff >= 0.10;
    detail += " r=" + Num(rad.r) + ": max|vor-del| " + Fmt("%.3f", max_diff) + ";";
  }
  pass = pass && monotone;
  detail += monotone ? " monotone" : " NOT monotone";
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 9. Voronoi stabilization bound.

Verdict Criterion9() {
  bool pass = true;
  std::string detail;
  for (double n : {0.5, 1.0}) {
    const StabDiagnostics d = DiagnoseStabilization(Spec(VoronoiEdges{100.0}), n, 2000, ParameterSeed(901, n));
    const double fail = 1.0 - d.empirical_prob;
    const double bound = 1.0 - d.theory_bound;
    pass = pass && fail <= bound + 3.0 * d.std_error;
    detail += " n=" + Num(n) + ": " + Fmt("%.4f", fail) + " <= " + Fmt("%.4g", bound) + " + 3*" + Fmt("%.4f", d.std_error);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 10. Determinism across reruns and worker counts.

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict Criterion10() {
  std::vector<RunConfig> configs;
  RunConfig base;
  base.seed = 1001;
  base.replicates = 40;
  base.calibration_replicates = 20;
  base.calibration_window = 5.0;
  {
    RunConfig c = base;
    c.experiment = "sweep";
    c.spec = Spec(VoronoiEdges{100.0});
    c.target_mass = 20.0;
    c.r = {0.075, 0.475};
    c.lambda_for_r[1] = {10.0, 15.0, 20.0};
    c.lambda_for_r[2] = {0.1, 0.3};
    c.K = 4.0;
    c.theta0 = 0.5;
    configs.push_back(c);
  }
  {
    RunConfig c = base;
    c.experiment = "limit-large-r";
    c.spec = Spec(ShotNoise{0.5, 1.0, 1.0});
    c.r = {1.0, 2.0};
    c.rho = 1.8;
    c.K = 6.0;
    configs.push_back(c);
  }
  {
    RunConfig c = base;
    c.experiment = "limit-singular";
    c.spec = Spec(DelaunayEdges{1.0});
    c.target_mass = 1.0;
    c.lambda = {20.0, 40.0};
    c.c = 0.5;
    c.K = 6.0;
    configs.push_back(c);
  }
  {
    RunConfig c = base;
    c.experiment = "limit-ac";
    c.spec = Spec(ModulatedBoolean{0.8, 0.3, 1.0, 0.1});
    c.lambda = {5.0, 10.0};
    c.rho = 2.0;
    c.K = 6.0;
    configs.push_back(c);
  }
  {
    RunConfig c = base;
    c.experiment = "diagnose-stab";
    c.spec = Spec(VoronoiEdges{100.0});
    c.n = {0.5, 1.0};
    configs.push_back(c);
  }
  {
    RunConfig c = base;
    c.experiment = "calibrate";
    c.spec = Spec(PoissonLines{2.0});
    configs.push_back(c);
  }

  std::ostringstream log;
  RunOptions opt;
  opt.log = &log;
  int identical = 0;
  std::string detail;
  for (const RunConfig& cfg : configs) {
    std::string csv[3];
    const int workers[3] = {1, 8, 1};
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      RunConfig c = cfg;
      c.workers = workers[k];
      c.output = (g_scratch / ("c10_" + cfg.experiment + "_" + std::to_string(k))).string();
      fs::remove_all(c.output);
      ok = ok && Run(c, opt) == kExitOk;
      csv[k] = Slurp(fs::path(c.output) / "results.csv");
    }
    ok = ok && csv[0].size() > 40 && csv[0] == csv[1] && csv[0] == csv[2];
    identical += ok;
    if (!ok) detail += " " + cfg.experiment + " differs;";
  }

  bool cli_ok = true;
  if (!g_cli.empty()) {
    const fs::path ini = g_scratch / "c10_cli.ini";
    {
      std::ofstream out(ini);
      out << "[measure]\nkind = delaunay\nseed_intensity = 34.699\n[grid]\nr = 0.225\nlambda = 1, 1.5, 2\nK = 4\n"
             "[run]\nreplicates = 40\n";
    }
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path out = g_scratch / ("c10_cli_" + std::to_string(k));
      fs::remove_all(out);
      const std::string cmd = "\"" + g_cli + "\" sweep --config \"" + ini.string() + "\" --seed 77 --workers " +
                              (k == 0 ? "1" : "8") + " --out \"" + out.string() + "\" 2>/dev/null";
      cli_ok = cli_ok && std::system(cmd.c_str()) == 0;
      csv[k] = Slurp(out / "results.csv");
    }
    cli_ok = cli_ok && !csv[0].empty() && csv[0] == csv[1];
    detail += cli_ok ? " cli identical" : " cli differs";
  } else {
    detail += " cli not checked";
  }
  return {identical == static_cast<int>(configs.size()) && cli_ok,
          std::to_string(identical) + "/" + std::to_string(configs.size()) + " experiments identical at workers 1, 8, rerun;" +
              detail};
}

struct Criterion {
  int id;
  double budget_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string scratch = (fs::temp_directory_path() / "coxperc_acceptance").string();
  app.add_option("--cli", g_cli, "coxperc executable for the command-line determinism check");
  app.add_option("--scratch", scratch, "directory for run outputs");
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  g_scratch = scratch;
  fs::create_directories(g_scratch);
  g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const Criterion criteria[] = {
      {1, 10, Criterion1},   {2, 120, Criterion2},  {3, 120, Criterion3},  {4, 120, Criterion4},
      {5, 300, Criterion5},  {6, 900, Criterion6},  {7, 900, Criterion7},  {8, 1200, Criterion8},
      {9, 60, Criterion9},   {10, 0, Criterion10},
  };
  std::printf("workers %d\n", g_workers);
  std::fflush(stdout);
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds <= 0 || seconds <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id, v.detail.c_str(), seconds,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
