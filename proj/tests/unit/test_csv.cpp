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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "qiopa/csv.hpp"
#include "qiopa/error.hpp"

using namespace qiopa;

TEST_CASE("doubles round trip through text") {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 10000; ++i) {
    double x;
    const std::uint64_t bits = gen();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    REQUIRE(csv::parse_double(csv::format_double(x)) == x);
  }
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(std::isnan(csv::parse_double(csv::format_double(std::nan("")))));
  CHECK(csv::parse_double(csv::format_double(std::numeric_limits<double>::infinity())) ==
        std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(csv::parse_double("1.5x"), ParseError);
  CHECK(csv::parse_int("-42") == -42);
  CHECK_THROWS_AS(csv::parse_int("4.2"), ParseError);
}

TEST_CASE("tables with metadata") {
  csv::Table t;
  t.metadata.emplace_back("config_hash", "abc123");
  t.header = {"x", "y"};
  t.add_row({"1", "2"});
  t.add_row({"3", "4"});
  std::stringstream s;
  csv::write(s, t);
  CHECK(s.str() == "# config_hash=abc123\nx,y\n1,2\n3,4\n");
  const auto back = csv::read(s);
  REQUIRE(back.meta("config_hash") != nullptr);
  CHECK(*back.meta("config_hash") == "abc123");
  CHECK(back.column("y") == 1);
  CHECK_FALSE(back.has_column("z"));
  CHECK_THROWS_AS(back.column("z"), ParseError);
  CHECK(back.rows == t.rows);
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
}
