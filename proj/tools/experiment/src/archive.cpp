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

#include "qiopa/experiment/archive.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "qiopa/error.hpp"

namespace qiopa::experiment {

namespace fs = std::filesystem;

#ifndef QIOPA_VERSION
#define QIOPA_VERSION "unknown"
#endif

void ResultArchive::add_table(const std::string& file, csv::Table table) {
  table.metadata.insert(table.metadata.begin(), {"config_hash", config_hash});
  tables.emplace_back(file, std::move(table));
}

const csv::Table& ResultArchive::table(const std::string& file) const {
  for (const auto& [name, t] : tables) {
    if (name == file) return t;
  }
  throw Error("archive has no table '" + file + "'");
}

nlohmann::json ResultArchive::manifest() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& t : tables) files.push_back(t.first);
  for (const auto& t : texts) files.push_back(t.first);
  return {{"tool", "qiopa"},
          {"version", QIOPA_VERSION},
          {"command", command},
          {"config_hash", config_hash},
          {"master_seed", master_seed},
          {"workers", workers},
          {"started_utc", started_utc},
          {"finished_utc", finished_utc},
          {"wall_seconds", wall_seconds},
          {"files", files},
          {"config", config}};
}

void ResultArchive::write(const std::string& dir) const {
  fs::create_directories(dir);
  const fs::path base(dir);
  for (const auto& [name, t] : tables) csv::write_file((base / name).string(), t);
  for (const auto& [name, text] : texts) {
    std::ofstream out(base / name, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + (base / name).string());
  }
  std::ofstream out(base / "manifest.json", std::ios::binary);
  out << manifest().dump(2) << '\n';
  if (!out) throw Error("cannot write manifest in " + dir);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qiopa::experiment
