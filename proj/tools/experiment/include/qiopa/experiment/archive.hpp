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

// Result archives: a manifest plus CSV tables written into one directory.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qiopa/csv.hpp"
#include "qiopa/experiment/config.hpp"

namespace qiopa::experiment {

struct ResultArchive {
  std::string command;
  std::string config_hash;
  nlohmann::json config;  ///< full config, including output and workers
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  std::string started_utc;
  std::string finished_utc;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, csv::Table>> tables;  ///< file name, table
  std::vector<std::pair<std::string, std::string>> texts;  ///< file name, content

  /// Adds the table, stamping it with the config hash.
  void add_table(const std::string& file, csv::Table table);
  const csv::Table& table(const std::string& file) const;
  nlohmann::json manifest() const;
  /// Creates `dir` if needed and writes manifest.json, tables and texts.
  void write(const std::string& dir) const;
};

std::string utc_now();

}  // namespace qiopa::experiment
