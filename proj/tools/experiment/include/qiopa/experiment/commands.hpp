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

// The six scenario commands behind the qiopa tool.

#pragma once

#include <string>
#include <vector>

#include "qiopa/experiment/archive.hpp"
#include "qiopa/experiment/config.hpp"

namespace qiopa::experiment {

struct CommandOutcome {
  ResultArchive archive;
  bool checks_passed = true;  ///< false only for a failed oracle check
  std::vector<std::string> summary;  ///< human-readable lines for stdout
};

/// Validates the config and dispatches on its kind. Archive timing fields
/// are filled in; nothing is written to disk.
CommandOutcome run_scenario(const ScenarioConfig& config);

CommandOutcome cmd_fringe(const ScenarioConfig& config);
CommandOutcome cmd_enhancement_map(const ScenarioConfig& config);
CommandOutcome cmd_of_tradeoff(const ScenarioConfig& config);
CommandOutcome cmd_fisher(const ScenarioConfig& config);
CommandOutcome cmd_calibrate(const ScenarioConfig& config);
CommandOutcome cmd_oracle_check(const ScenarioConfig& config);

}  // namespace qiopa::experiment
