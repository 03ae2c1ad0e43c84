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

// Scenario configuration for the qiopa tool.
//
// A config is a JSON object with four sections:
//
//   {
//     "scenario": "fringe",
//     "physics": {"g": 4.5, "p": 0.15, "eta": 3e-4, "seed_visibility": 0.45,
//                 "phi_points": 16},
//     "run":     {"trials": 100000, "master_seed": 1, "workers": 2},
//     "options": {...},
//     "output":  {"dir": "results/fringe"}
//   }
//
// Every key is optional; unknown keys are rejected. The config hash covers
// the scenario, physics, run and options sections with the worker count
// removed, so it changes exactly when the produced tables can change.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qiopa::experiment {

/// Invalid or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { fringe, enhancement_map, of_tradeoff, fisher, calibrate, oracle_check };

const char* to_string(ScenarioKind kind);
/// Accepts both "of_tradeoff" and the command spelling "of-tradeoff".
ScenarioKind scenario_from_string(const std::string& name);

struct PhysicsConfig {
  double g = 4.5;
  std::vector<double> g_grid;
  double p = 0.15;
  std::vector<double> p_grid;
  double eta = 3e-4;
  std::vector<double> eta_grid;
  double seed_visibility = 1.0;
  std::vector<double> phi_grid;  ///< explicit phases; overrides phi_points
  int phi_points = 16;           ///< uniform grid on [0, 2 pi)
  std::int64_t k = 0;
  std::vector<std::int64_t> k_grid;

  /// Explicit grid, or phi_points uniform phases.
  std::vector<double> phases() const;
};

/// Per-scenario physics defaults: V_s = 0.45 for fringe, (p, eta) =
/// (0.14, 0.005) for of_tradeoff, (g, p, eta) = (2, 0.2, 1e-4) for fisher and
/// (g, eta) = (2, 0.1) for synthetic calibration data.
PhysicsConfig default_physics(ScenarioKind kind);

struct RunConfig {
  std::uint64_t trials = 100000;  ///< per phase point
  std::uint64_t master_seed = 1;
  std::optional<unsigned> workers;  ///< falls back to QIOPA_WORKERS, then 1
  std::uint64_t batch_size = 4096;
};

struct OptionsConfig {
  // enhancement_map
  std::vector<std::string> panels = {"fig2a", "fig2b", "fig2c", "fig2d"};
  std::uint64_t max_cells = 1000000;
  int grid_points = 41;
  // fisher
  std::string fisher_method = "automatic";
  // of_tradeoff
  bool common_random_numbers = true;
  // calibrate
  std::string data;  ///< CSV path; empty means synthetic data from (g, eta)
  std::string power_mode = "raw";
  std::string weights = "poisson";
  int synthetic_points = 20;
  double synthetic_noise = 0.0;
  // oracle_check
  std::vector<double> oracle_gains = {0.1, 0.3, 0.5, 0.8, 1.0};
  int oracle_dim = 128;
  std::uint64_t sampler_trials = 200000;
  bool corrupt_formula = false;  ///< test hook: perturbs the closed forms
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::fringe;
  PhysicsConfig physics;
  RunConfig run;
  OptionsConfig options;
  std::string out_dir = "results";
  std::string base_dir;  ///< directory of the config file, for relative data paths

  /// Throws ConfigError when a field is outside the range its module accepts.
  void validate() const;
  unsigned resolved_workers() const;

  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j, ScenarioKind kind);
  /// Canonical JSON without output paths or the worker count.
  nlohmann::json hashed_json() const;
  /// 16 hex digits of FNV-1a over the canonical hashed JSON.
  std::string hash() const;
};

/// Reads a config file; the scenario key, when present, must match `kind`.
ScenarioConfig load_config(const std::string& path, ScenarioKind kind);

/// Applies "section.key=value" overrides; the value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Looks up NAME.json in QIOPA_CONFIG_DIR, the source tree and the install tree.
std::string find_preset(const std::string& name);

}  // namespace qiopa::experiment
