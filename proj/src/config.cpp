#include "coxperc/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

namespace coxperc {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> ParseDouble(const std::string& text) {
  const std::string t = Trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> ParseInt(const std::string& text) {
  const std::string t = Trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<std::vector<double>> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = ParseDouble(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::string JoinList(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += FormatDouble(v[i]);
  }
  return out;
}

// Family keys per measure kind.
const std::map<std::string, std::vector<std::string>>& FamilyKeys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"shot_noise", {"kernel_radius", "kernel_height", "center_intensity"}},
      {"boolean", {"grain_radius", "grain_intensity", "inside", "outside"}},
      {"voronoi", {"seed_intensity"}},
      {"delaunay", {"seed_intensity"}},
      {"lines", {"line_intensity"}},
      {"constant", {"density"}},
  };
  return keys;
}

std::optional<MeasureFamily> BuildFamily(const std::string& kind, const std::map<std::string, double>& v) {
  auto get = [&](const char* key, double fallback) {
    const auto it = v.find(key);
    return it == v.end() ? fallback : it->second;
  };
  if (kind == "shot_noise") {
    return ShotNoise{get("kernel_radius", 1.0), get("kernel_height", 1.0), get("center_intensity", 1.0)};
  }
  if (kind == "boolean") {
    return ModulatedBoolean{get("grain_radius", 1.0), get("grain_intensity", 1.0), get("inside", 1.0),
                            get("outside", 0.0)};
  }
  if (kind == "voronoi") return VoronoiEdges{get("seed_intensity", 1.0)};
  if (kind == "delaunay") return DelaunayEdges{get("seed_intensity", 1.0)};
  if (kind == "lines") return PoissonLines{get("line_intensity", 1.0)};
  if (kind == "constant") return ConstantLebesgue{get("density", 1.0)};
  return std::nullopt;
}

std::vector<std::pair<std::string, double>> FamilyValues(const MeasureFamily& family) {
  struct Visitor {
    std::vector<std::pair<std::string, double>> operator()(const ShotNoise& s) const {
      return {{"kernel_radius", s.kernel_radius}, {"kernel_height", s.kernel_height},
              {"center_intensity", s.center_intensity}};
    }
    std::vector<std::pair<std::string, double>> operator()(const ModulatedBoolean& b) const {
      return {{"grain_radius", b.grain_radius}, {"grain_intensity", b.grain_intensity}, {"inside", b.inside},
              {"outside", b.outside}};
    }
    std::vector<std::pair<std::string, double>> operator()(const VoronoiEdges& x) const {
      return {{"seed_intensity", x.seed_intensity}};
    }
    std::vector<std::pair<std::string, double>> operator()(const DelaunayEdges& x) const {
      return {{"seed_intensity", x.seed_intensity}};
    }
    std::vector<std::pair<std::string, double>> operator()(const PoissonLines& x) const {
      return {{"line_intensity", x.line_intensity}};
    }
    std::vector<std::pair<std::string, double>> operator()(const ConstantLebesgue& x) const {
      return {{"density", x.density}};
    }
  };
  return std::visit(Visitor{}, family);
}

}  // namespace

const std::vector<double>& RunConfig::LambdaGridFor(std::size_t i) const {
  const auto it = lambda_for_r.find(static_cast<int>(i) + 1);
  return it == lambda_for_r.end() ? lambda : it->second;
}

std::string FormatDouble(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorKind::kParameter, "number formatting failed");
  return std::string(buf.data(), ptr);
}

std::vector<std::string> ValidateConfig(const RunConfig& c) {
  std::vector<std::string> errors;
  if (std::find(std::begin(kExperiments), std::end(kExperiments), c.experiment) == std::end(kExperiments)) {
    errors.push_back("run.experiment: unknown experiment '" + c.experiment + "'");
  }
  if (c.replicates < 1) errors.push_back("run.replicates: must be >= 1");
  if (c.workers < 1) errors.push_back("run.workers: must be >= 1");
  if (c.output.empty()) errors.push_back("run.output: must not be empty");
  try {
    c.spec.Validate();
  } catch (const Error& e) {
    errors.push_back(std::string("measure: ") + e.what());
  }
  if (c.target_mass && !(*c.target_mass >= 0.0)) errors.push_back("measure.target_mass: must be >= 0");
  if (c.calibration_replicates < 2) errors.push_back("measure.calibration_replicates: must be >= 2");
  if (!(c.calibration_window > 0.0)) errors.push_back("measure.calibration_window: must be > 0");

  auto all = [](const std::vector<double>& v, auto pred) { return std::all_of(v.begin(), v.end(), pred); };
  if (!all(c.lambda, [](double x) { return x >= 0.0; })) errors.push_back("grid.lambda: values must be >= 0");
  for (const auto& [k, grid] : c.lambda_for_r) {
    if (k < 1 || static_cast<std::size_t>(k) > c.r.size()) {
      errors.push_back("grid.lambda." + std::to_string(k) + ": no radius with that index");
    }
    if (grid.empty() || !all(grid, [](double x) { return x >= 0.0; })) {
      errors.push_back("grid.lambda." + std::to_string(k) + ": values must be >= 0");
    }
  }
  if (!all(c.r, [](double x) { return x > 0.0; })) errors.push_back("grid.r: values must be > 0");
  if (!all(c.n, [](double x) { return x > 0.0; })) errors.push_back("grid.n: values must be > 0");
  if (!(c.K > 0.0)) errors.push_back("grid.K: must be > 0");
  if (!(c.c > 0.0)) errors.push_back("grid.c: must be > 0");
  if (!(c.rho > 0.0)) errors.push_back("grid.rho: must be > 0");
  if (c.theta0 && !(*c.theta0 > 0.0 && *c.theta0 < 1.0)) errors.push_back("grid.theta0: must lie in (0, 1)");

  const std::string& x = c.experiment;
  if (x == "sweep") {
    if (c.r.empty()) errors.push_back("grid.r: required for sweep");
    for (std::size_t i = 0; i < c.r.size(); ++i) {
      if (c.LambdaGridFor(i).empty()) errors.push_back("grid.lambda: required for sweep");
    }
  }
  if (x == "limit-large-r" && c.r.empty()) errors.push_back("grid.r: required for limit-large-r");
  if ((x == "limit-singular" || x == "limit-ac") && c.lambda.empty()) {
    errors.push_back("grid.lambda: required for " + x);
  }
  if (x == "limit-singular" && !c.spec.IsSingular()) {
    errors.push_back("measure.kind: limit-singular needs voronoi, delaunay or lines");
  }
  if (x == "limit-ac" && !std::holds_alternative<ModulatedBoolean>(c.spec.family)) {
    errors.push_back("measure.kind: limit-ac needs boolean");
  }
  if (x == "diagnose-stab" && c.n.empty()) errors.push_back("grid.n: required for diagnose-stab");
  std::sort(errors.begin(), errors.end());
  errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
  return errors;
}

ParseResult ParseConfig(const std::string& text) {
  ParseResult result;
  auto& errors = result.errors;
  RunConfig c;
  std::string section;
  std::set<std::string> seen;
  std::map<std::string, double> family_values;
  std::vector<std::string> family_keys_given;
  std::string kind = "constant";
  bool has_seed = false;
  bool has_normalization = false;

  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + "malformed section header");
        continue;
      }
      section = Trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "measure" && section != "grid") {
        errors.push_back(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) {
      errors.push_back(full + ": duplicate key");
      continue;
    }
    auto number = [&](double& out) {
      const auto v = ParseDouble(value);
      if (!v) {
        errors.push_back(full + ": not a number");
        return;
      }
      out = *v;
    };
    auto list = [&](std::vector<double>& out) {
      const auto v = ParseList(value);
      if (!v) {
        errors.push_back(full + ": not a comma-separated list of numbers");
        return;
      }
      out = *v;
    };
    auto integer = [&](int& out) {
      const auto v = ParseInt<int>(value);
      if (!v) {
        errors.push_back(full + ": not an integer");
        return;
      }
      out = *v;
    };

    if (section == "run") {
      if (key == "experiment") {
        c.experiment = value;
      } else if (key == "seed") {
        const auto v = ParseInt<std::uint64_t>(value);
        if (!v) {
          errors.push_back(full + ": not a non-negative integer");
        } else {
          c.seed = *v;
          has_seed = true;
        }
      } else if (key == "replicates") {
        integer(c.replicates);
      } else if (key == "workers") {
        integer(c.workers);
      } else if (key == "output") {
        c.output = value;
      } else {
        errors.push_back(full + ": unknown key");
      }
    } else if (section == "measure") {
      if (key == "kind") {
        kind = value;
        if (!FamilyKeys().count(kind)) errors.push_back(full + ": unknown measure kind '" + kind + "'");
      } else if (key == "dim") {
        integer(c.spec.dim);
      } else if (key == "normalization") {
        number(c.spec.normalization);
        has_normalization = true;
      } else if (key == "target_mass") {
        double v = 0.0;
        number(v);
        c.target_mass = v;
      } else if (key == "calibration_replicates") {
        integer(c.calibration_replicates);
      } else if (key == "calibration_window") {
        number(c.calibration_window);
      } else {
        double v = 0.0;
        const auto before = errors.size();
        number(v);
        if (errors.size() == before) family_values[key] = v;
        family_keys_given.push_back(key);
      }
    } else if (section == "grid") {
      if (key == "lambda") {
        list(c.lambda);
      } else if (key.rfind("lambda.", 0) == 0) {
        const auto idx = ParseInt<int>(key.substr(7));
        if (!idx) {
          errors.push_back(full + ": expected lambda.<radius index>");
        } else {
          list(c.lambda_for_r[*idx]);
        }
      } else if (key == "r") {
        list(c.r);
      } else if (key == "K") {
        number(c.K);
      } else if (key == "c") {
        number(c.c);
      } else if (key == "rho") {
        number(c.rho);
      } else if (key == "n") {
        list(c.n);
      } else if (key == "theta0") {
        double v = 0.0;
        number(v);
        c.theta0 = v;
      } else {
        errors.push_back(full + ": unknown key");
      }
    } else {
      errors.push_back(where + "key outside a known section");
    }
  }

  if (!has_seed) errors.push_back("run.seed: required");
  if (has_normalization && c.target_mass) {
    errors.push_back("measure.normalization: conflicts with measure.target_mass");
  }
  if (const auto it = FamilyKeys().find(kind); it != FamilyKeys().end()) {
    for (const auto& key : family_keys_given) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        errors.push_back("measure." + key + ": unknown key for kind " + kind);
      }
    }
    c.spec.family = *BuildFamily(kind, family_values);
  }
  for (auto& e : ValidateConfig(c)) errors.push_back(std::move(e));
  std::sort(errors.begin(), errors.end());
  errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
  if (errors.empty()) result.config = std::move(c);
  return result;
}

std::string SerializeConfig(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "experiment = " << c.experiment << "\n";
  out << "seed = " << c.seed << "\n";
  out << "replicates = " << c.replicates << "\n";
  out << "workers = " << c.workers << "\n";
  out << "output = " << c.output << "\n\n";
  out << "[measure]\n";
  out << "kind = " << c.spec.Kind() << "\n";
  out << "dim = " << c.spec.dim << "\n";
  for (const auto& [key, value] : FamilyValues(c.spec.family)) out << key << " = " << FormatDouble(value) << "\n";
  if (c.target_mass) {
    out << "target_mass = " << FormatDouble(*c.target_mass) << "\n";
  } else {
    out << "normalization = " << FormatDouble(c.spec.normalization) << "\n";
  }
  out << "calibration_replicates = " << c.calibration_replicates << "\n";
  out << "calibration_window = " << FormatDouble(c.calibration_window) << "\n\n";
  out << "[grid]\n";
  if (!c.lambda.empty()) out << "lambda = " << JoinList(c.lambda) << "\n";
  for (const auto& [k, grid] : c.lambda_for_r) out << "lambda." << k << " = " << JoinList(grid) << "\n";
  if (!c.r.empty()) out << "r = " << JoinList(c.r) << "\n";
  out << "K = " << FormatDouble(c.K) << "\n";
  out << "c = " << FormatDouble(c.c) << "\n";
  out << "rho = " << FormatDouble(c.rho) << "\n";
  if (!c.n.empty()) out << "n = " << JoinList(c.n) << "\n";
  if (c.theta0) out << "theta0 = " << FormatDouble(*c.theta0) << "\n";
  return out.str();
}

std::string ConfigHash(const RunConfig& config) {
  // Worker count and output location do not change results.
  RunConfig canonical = config;
  canonical.workers = 1;
  canonical.output = "-";
  const std::string text = SerializeConfig(canonical);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace coxperc
