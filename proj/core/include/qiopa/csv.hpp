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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qiopa::csv {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
std::string format_int(std::int64_t value);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// A plain comma-separated table with leading "# key=value" metadata lines.
/// Fields never contain commas or quotes, so no quoting is performed.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  ///< throws ParseError
  bool has_column(std::string_view name) const;
  const std::string* meta(std::string_view key) const;

  void add_row(std::vector<std::string> row);
};

void write(std::ostream& out, const Table& table);
Table read(std::istream& in);

void write_file(const std::string& path, const Table& table);
Table read_file(const std::string& path);

}  // namespace qiopa::csv
