// Copyright 2026 The qiopa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qiopa: run a scenario and write its result archive.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qiopa/error.hpp"
#include "qiopa/experiment/commands.hpp"
#include "qiopa/experiment/config.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using qiopa::experiment::ConfigError;
using qiopa::experiment::ScenarioKind;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitChecks = 4;

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> trials;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

// Flags beat the config file; QIOPA_WORKERS only applies when neither sets workers.
qiopa::experiment::ScenarioConfig resolve(std::optional<ScenarioKind> kind, const Flags& f) {
  if (!f.config.empty() && !f.preset.empty()) {
    throw ConfigError("--config and --preset are mutually exclusive");
  }
  std::string path = f.config;
  if (!f.preset.empty()) path = qiopa::experiment::find_preset(f.preset);
  json j = path.empty() ? json::object() : read_json(path);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!kind) {
    if (!j.contains("scenario") || !j["scenario"].is_string()) {
      throw ConfigError("'run' needs a config with a \"scenario\" key");
    }
    kind = qiopa::experiment::scenario_from_string(j["scenario"].get<std::string>());
  }
  for (const auto& o : f.overrides) qiopa::experiment::apply_override(j, o);
  if (f.seed) j["run"]["master_seed"] = *f.seed;
  if (f.workers) j["run"]["workers"] = *f.workers;
  if (f.trials) j["run"]["trials"] = *f.trials;
  if (!f.out.empty()) j["output"]["dir"] = f.out;
  auto c = qiopa::experiment::ScenarioConfig::from_json(j, *kind);
  if (!path.empty()) c.base_dir = fs::path(path).parent_path().string();
  return c;
}

int execute(std::optional<ScenarioKind> kind, const Flags& f) {
  try {
    const auto config = resolve(kind, f);
    const auto outcome = qiopa::experiment::run_scenario(config);
    outcome.archive.write(config.out_dir);
    if (!f.quiet) {
      std::cout << outcome.archive.command << " [" << outcome.archive.config_hash << "] -> "
                << config.out_dir << "\n";
      for (const auto& line : outcome.summary) std::cout << "  " << line << "\n";
    }
    return outcome.checks_passed ? kExitOk : kExitChecks;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qiopa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  }
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("-c,--config", f.config, "JSON scenario config");
  app->add_option("-p,--preset", f.preset, "named config from the preset directory");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("-w,--workers", f.workers, "worker threads (default: QIOPA_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  app->add_option("-n,--trials", f.trials, "trials per phase point")->check(CLI::PositiveNumber);
  app->add_option("-o,--out", f.out, "output directory");
  app->add_option("-s,--set", f.overrides, "override, e.g. physics.g=2.0 (repeatable)");
  app->add_flag("-q,--quiet", f.quiet, "no summary on stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qiopa: amplified single-photon interferometry scenarios"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QIOPA_VERSION);

  Flags flags;
  std::optional<ScenarioKind> selected;
  const std::vector<std::pair<ScenarioKind, std::string>> commands = {
      {ScenarioKind::fringe, "counting fringes with and without amplification"},
      {ScenarioKind::enhancement_map, "closed-form enhancement maps"},
      {ScenarioKind::of_tradeoff, "threshold sweep of the orthogonality filter"},
      {ScenarioKind::fisher, "Fisher information against the moment sensitivity"},
      {ScenarioKind::calibrate, "fit gain and efficiency to count data"},
      {ScenarioKind::oracle_check, "closed forms and sampler against independent references"},
  };
  for (const auto& [kind, help] : commands) {
    std::string name = qiopa::experiment::to_string(kind);
    for (auto& ch : name) {
      if (ch == '_') ch = '-';
    }
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    sub->callback([&selected, kind = kind] { selected = kind; });
  }
  auto* run = app.add_subcommand("run", "run a config, taking the scenario from its \"scenario\" key");
  add_common(run, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  return execute(selected, flags);
}
