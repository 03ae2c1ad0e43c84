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

#include "qiopa/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "qiopa/mc.hpp"

namespace qiopa::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::fringe: return "fringe";
    case ScenarioKind::enhancement_map: return "enhancement_map";
    case ScenarioKind::of_tradeoff: return "of_tradeoff";
    case ScenarioKind::fisher: return "fisher";
    case ScenarioKind::calibrate: return "calibrate";
    case ScenarioKind::oracle_check: return "oracle_check";
  }
  return "fringe";
}

ScenarioKind scenario_from_string(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (auto k : {ScenarioKind::fringe, ScenarioKind::enhancement_map, ScenarioKind::of_tradeoff,
                 ScenarioKind::fisher, ScenarioKind::calibrate, ScenarioKind::oracle_check}) {
    if (n == to_string(k)) return k;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

std::vector<double> PhysicsConfig::phases() const {
  if (!phi_grid.empty()) return phi_grid;
  std::vector<double> out;
  for (int i = 0; i < phi_points; ++i) out.push_back(2.0 * std::numbers::pi * i / phi_points);
  return out;
}

PhysicsConfig default_physics(ScenarioKind kind) {
  PhysicsConfig p;
  switch (kind) {
    case ScenarioKind::fringe: p.seed_visibility = 0.45; break;
    case ScenarioKind::of_tradeoff:
      p.p = 0.14;
      p.eta = 0.005;
      break;
    case ScenarioKind::fisher:
      p.g = 2.0;
      p.p = 0.2;
      p.eta = 1e-4;
      break;
    case ScenarioKind::calibrate:
      p.g = 2.0;
      p.eta = 0.1;
      break;
    default: break;
  }
  return p;
}

void ScenarioConfig::validate() const {
  const auto& ph = physics;
  check(std::isfinite(ph.g) && ph.g >= 0.0, "physics.g must be >= 0");
  check(finite_all(ph.g_grid) && std::all_of(ph.g_grid.begin(), ph.g_grid.end(), [](double g) { return g >= 0.0; }),
        "physics.g_grid entries must be >= 0");
  check(ph.p >= 0.0 && ph.p <= 1.0, "physics.p must be in [0, 1]");
  check(std::all_of(ph.p_grid.begin(), ph.p_grid.end(), [](double p) { return p > 0.0 && p <= 1.0; }),
        "physics.p_grid entries must be in (0, 1]");
  check(ph.eta > 0.0 && ph.eta <= 1.0, "physics.eta must be in (0, 1]");
  check(std::all_of(ph.eta_grid.begin(), ph.eta_grid.end(), [](double e) { return e > 0.0 && e <= 1.0; }),
        "physics.eta_grid entries must be in (0, 1]");
  check(ph.seed_visibility >= 0.0 && ph.seed_visibility <= 1.0, "physics.seed_visibility must be in [0, 1]");
  check(finite_all(ph.phi_grid), "physics.phi_grid entries must be finite");
  for (std::size_t i = 1; i < ph.phi_grid.size(); ++i) {
    check(ph.phi_grid[i] > ph.phi_grid[i - 1], "physics.phi_grid must be strictly increasing");
  }
  check(ph.phi_points >= 1, "physics.phi_points must be >= 1");
  check(ph.k >= 0, "physics.k must be >= 0");
  check(std::all_of(ph.k_grid.begin(), ph.k_grid.end(), [](std::int64_t k) { return k >= 0; }),
        "physics.k_grid entries must be >= 0");
  check(run.trials >= 2, "run.trials must be >= 2");
  check(run.batch_size >= 1, "run.batch_size must be >= 1");
  check(!run.workers || *run.workers >= 1, "run.workers must be >= 1");

  const auto& o = options;
  static const std::set<std::string> panels = {"fig2a", "fig2b", "fig2c", "fig2d"};
  for (const auto& p : o.panels) check(panels.count(p) != 0, "options.panels: unknown panel '" + p + "'");
  check(o.grid_points >= 2, "options.grid_points must be >= 2");
  check(o.fisher_method == "automatic" || o.fisher_method == "exact" || o.fisher_method == "gaussian",
        "options.fisher_method must be automatic, exact or gaussian");
  check(o.power_mode == "raw" || o.power_mode == "normalized", "options.power_mode must be raw or normalized");
  check(o.weights == "poisson" || o.weights == "unweighted", "options.weights must be poisson or unweighted");
  check(o.synthetic_points >= 4, "options.synthetic_points must be >= 4");
  check(o.synthetic_noise >= 0.0, "options.synthetic_noise must be >= 0");
  check(o.sampler_trials >= 1000, "options.sampler_trials must be >= 1000");
  check(finite_all(o.oracle_gains), "options.oracle_gains entries must be finite");

  if (kind == ScenarioKind::fringe || kind == ScenarioKind::of_tradeoff) {
    check(ph.phases().size() >= 3, "a fringe needs at least 3 phase points");
  }
  if (kind == ScenarioKind::of_tradeoff || kind == ScenarioKind::enhancement_map) {
    check(ph.p > 0.0, "physics.p must be > 0 for enhancement figures");
  }
}

unsigned ScenarioConfig::resolved_workers() const {
  return run.workers ? *run.workers : default_worker_count();
}

json ScenarioConfig::to_json() const {
  json j;
  j["scenario"] = to_string(kind);
  j["physics"] = {{"g", physics.g},
                  {"g_grid", physics.g_grid},
                  {"p", physics.p},
                  {"p_grid", physics.p_grid},
                  {"eta", physics.eta},
                  {"eta_grid", physics.eta_grid},
                  {"seed_visibility", physics.seed_visibility},
                  {"phi_grid", physics.phi_grid},
                  {"phi_points", physics.phi_points},
                  {"k", physics.k},
                  {"k_grid", physics.k_grid}};
  j["run"] = {{"trials", run.trials}, {"master_seed", run.master_seed}, {"batch_size", run.batch_size}};
  if (run.workers) j["run"]["workers"] = *run.workers;
  j["options"] = {{"panels", options.panels},
                  {"max_cells", options.max_cells},
                  {"grid_points", options.grid_points},
                  {"fisher_method", options.fisher_method},
                  {"common_random_numbers", options.common_random_numbers},
                  {"data", options.data},
                  {"power_mode", options.power_mode},
                  {"weights", options.weights},
                  {"synthetic_points", options.synthetic_points},
                  {"synthetic_noise", options.synthetic_noise},
                  {"oracle_gains", options.oracle_gains},
                  {"oracle_dim", options.oracle_dim},
                  {"sampler_trials", options.sampler_trials},
                  {"corrupt_formula", options.corrupt_formula}};
  j["output"] = {{"dir", out_dir}};
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j, ScenarioKind kind) {
  reject_unknown(j, "config", {"scenario", "physics", "run", "options", "output"});
  ScenarioConfig c;
  c.kind = kind;
  c.physics = default_physics(kind);
  if (j.contains("scenario")) {
    std::string name;
    read(j, "scenario", name, "config");
    if (scenario_from_string(name) != kind) {
      throw ConfigError("config is for scenario '" + name + "', not '" + to_string(kind) + "'");
    }
  }
  if (j.contains("physics")) {
    const auto& p = j.at("physics");
    reject_unknown(p, "physics", {"g", "g_grid", "p", "p_grid", "eta", "eta_grid", "seed_visibility",
                                  "phi_grid", "phi_points", "k", "k_grid"});
    read(p, "g", c.physics.g, "physics");
    read(p, "g_grid", c.physics.g_grid, "physics");
    read(p, "p", c.physics.p, "physics");
    read(p, "p_grid", c.physics.p_grid, "physics");
    read(p, "eta", c.physics.eta, "physics");
    read(p, "eta_grid", c.physics.eta_grid, "physics");
    read(p, "seed_visibility", c.physics.seed_visibility, "physics");
    read(p, "phi_grid", c.physics.phi_grid, "physics");
    read(p, "phi_points", c.physics.phi_points, "physics");
    read(p, "k", c.physics.k, "physics");
    read(p, "k_grid", c.physics.k_grid, "physics");
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    reject_unknown(r, "run", {"trials", "master_seed", "workers", "batch_size"});
    read(r, "trials", c.run.trials, "run");
    read(r, "master_seed", c.run.master_seed, "run");
    read(r, "batch_size", c.run.batch_size, "run");
    if (r.contains("workers")) {
      unsigned w = 0;
      read(r, "workers", w, "run");
      c.run.workers = w;
    }
  }
  if (j.contains("options")) {
    const auto& o = j.at("options");
    reject_unknown(o, "options", {"panels", "max_cells", "grid_points", "fisher_method",
                                  "common_random_numbers", "data", "power_mode", "weights",
                                  "synthetic_points", "synthetic_noise", "oracle_gains", "oracle_dim",
                                  "sampler_trials", "corrupt_formula"});
    read(o, "panels", c.options.panels, "options");
    read(o, "max_cells", c.options.max_cells, "options");
    read(o, "grid_points", c.options.grid_points, "options");
    read(o, "fisher_method", c.options.fisher_method, "options");
    read(o, "common_random_numbers", c.options.common_random_numbers, "options");
    read(o, "data", c.options.data, "options");
    read(o, "power_mode", c.options.power_mode, "options");
    read(o, "weights", c.options.weights, "options");
    read(o, "synthetic_points", c.options.synthetic_points, "options");
    read(o, "synthetic_noise", c.options.synthetic_noise, "options");
    read(o, "oracle_gains", c.options.oracle_gains, "options");
    read(o, "oracle_dim", c.options.oracle_dim, "options");
    read(o, "sampler_trials", c.options.sampler_trials, "options");
    read(o, "corrupt_formula", c.options.corrupt_formula, "options");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    reject_unknown(o, "output", {"dir"});
    read(o, "dir", c.out_dir, "output");
  }
  return c;
}

json ScenarioConfig::hashed_json() const {
  json j = to_json();
  j.erase("output");
  j["run"].erase("workers");
  // The data file enters through its contents, not its location.
  if (!options.data.empty()) {
    std::ifstream in(fs::path(base_dir) / options.data, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    j["options"]["data"] = bytes;
  }
  return j;
}

std::string ScenarioConfig::hash() const {
  const std::string text = hashed_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioConfig load_config(const std::string& path, ScenarioKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  auto c = ScenarioConfig::from_json(j, kind);
  c.base_dir = fs::path(path).parent_path().string();
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[section][key] = value;
}

std::string find_preset(const std::string& name) {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("QIOPA_CONFIG_DIR")) dirs.emplace_back(env);
#ifdef QIOPA_SOURCE_CONFIG_DIR
  dirs.emplace_back(QIOPA_SOURCE_CONFIG_DIR);
#endif
#ifdef QIOPA_INSTALL_CONFIG_DIR
  dirs.emplace_back(QIOPA_INSTALL_CONFIG_DIR);
#endif
  for (const auto& d : dirs) {
    const auto p = d / (name + ".json");
    if (fs::exists(p)) return p.string();
  }
  throw ConfigError("preset '" + name + "' not found");
}

}  // namespace qiopa::experiment
