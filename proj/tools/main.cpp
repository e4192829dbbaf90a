#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "coxperc/config.hpp"
#include "coxperc/runner.hpp"

namespace {

std::atomic<bool> g_interrupt{false};

extern "C" void OnSigint(int) { g_interrupt = true; }

bool HasKey(const std::string& body, const std::string& key) {
  std::istringstream lines(body);
  std::string line;
  while (std::getline(lines, line)) {
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line.compare(start, key.size(), key) != 0) continue;
    const auto rest = line.find_first_not_of(" \t", start + key.size());
    if (rest != std::string::npos && line[rest] == '=') return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cox-process continuum percolation experiments"};
  app.set_version_flag("--version", std::string(coxperc::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool snapshot = false;

  for (const char* name : coxperc::kExperiments) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "run config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--workers", workers, "override run.workers")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "override run.output");
    sub->add_flag("--snapshot", snapshot, "also write snapshot.svg");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : coxperc::kExitValidation;
  }
  const std::string experiment = app.get_subcommands().front()->get_name();

  std::ifstream in(config_path);
  std::stringstream text;
  text << in.rdbuf();
  std::string body = text.str();
  // The subcommand names the experiment, and a seed given on the command
  // line satisfies the required key.
  std::string prefix;
  if (!HasKey(body, "experiment")) prefix += "experiment = " + experiment + "\n";
  if (seed && !HasKey(body, "seed")) prefix += "seed = " + std::to_string(*seed) + "\n";
  if (!prefix.empty()) body = "[run]\n" + prefix + body;
  coxperc::ParseResult parsed = coxperc::ParseConfig(body);
  if (!parsed.config) {
    for (const auto& e : parsed.errors) std::cerr << "config error: " << e << "\n";
    return coxperc::kExitValidation;
  }
  coxperc::RunConfig config = *parsed.config;
  if (HasKey(body, "experiment") && config.experiment != experiment) {
    std::cerr << "config error: run.experiment is '" << config.experiment << "' but subcommand is '" << experiment
              << "'\n";
    return coxperc::kExitValidation;
  }
  config.experiment = experiment;
  if (seed) config.seed = *seed;
  if (workers) config.workers = *workers;
  if (out) config.output = *out;
  if (const auto errors = coxperc::ValidateConfig(config); !errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    return coxperc::kExitValidation;
  }

  std::signal(SIGINT, OnSigint);
  coxperc::RunOptions options;
  options.snapshot = snapshot;
  options.interrupt = &g_interrupt;
  return coxperc::Run(config, options);
}
