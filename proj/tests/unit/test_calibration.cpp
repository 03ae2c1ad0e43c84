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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "qiopa/calibration.hpp"
#include "qiopa/error.hpp"
#include "support.hpp"

using namespace qiopa;
using qiopa::testing::rel_diff;

namespace {

CalibrationDataset synthetic(double g_max, double eta, int n, double noise = 0.0, std::uint64_t seed = 0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  CalibrationDataset d;
  d.power_mode = PowerMode::normalized;
  for (int i = 1; i <= n; ++i) {
    const double p = static_cast<double>(i) / n;
    double c = model_counts(gain_power_map(p, 1.0, g_max), eta);
    if (noise > 0) c *= 1.0 + noise * nd(gen);
    d.points.push_back({p, c, 1.0});
  }
  return d;
}

}  // namespace

TEST_CASE("counts model") {
  CHECK(model_counts(0.0, 0.3) == 0.0);
  for (double g : {0.2, 1.0, 3.0}) CHECK(model_counts(g, 1.0) == doctest::Approx(std::tanh(g) * std::tanh(g)).epsilon(1e-15));
  const long double t2 = std::tanh(4.5L) * std::tanh(4.5L);
  const double direct = static_cast<double>(0.1L * t2 / (1.0L - 0.9L * t2));
  CHECK(model_counts(4.5, 0.1) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(model_counts(4.5, 0.1) == doctest::Approx(0.995087).epsilon(1e-6));
  CHECK_THROWS_AS(model_counts(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(model_counts(-1.0, 0.5), DomainError);
}

TEST_CASE("counts model monotonicity") {
  for (double eta : {0.01, 0.1, 0.5, 1.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 60; ++i) {
      const double c = model_counts(0.05 * i, eta);
      CHECK(c > prev);
      prev = c;
    }
  }
  for (double g : {0.1, 1.0, 3.0}) {
    double prev = -1.0;
    for (int i = 1; i <= 50; ++i) {
      const double c = model_counts(g, 0.02 * i);
      CHECK(c > prev);
      prev = c;
    }
  }
}

TEST_CASE("gain power map") {
  CHECK(gain_power_map(2.0, 2.0, 4.5) == 4.5);
  CHECK(gain_power_map(0.0, 2.0, 4.5) == 0.0);
  CHECK(gain_power_map(0.5, 2.0, 4.5) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK_THROWS_AS(gain_power_map(3.0, 2.0, 4.5), DomainError);
}

TEST_CASE("dataset validation") {
  auto d = synthetic(2.0, 0.1, 3);
  CHECK_THROWS_AS(d.validate(), DomainError);
  d = synthetic(2.0, 0.1, 6);
  d.points[2].power = d.points[3].power;
  CHECK_THROWS_AS(d.validate(), DomainError);
  d = synthetic(2.0, 0.1, 6);
  d.points[0].power = -0.1;
  CHECK_THROWS_AS(d.validate(), DomainError);
}

TEST_CASE("noiseless round trip") {
  const auto fit = fit_gain(synthetic(2.0, 0.1, 20));
  CHECK(rel_diff(fit.g_max, 2.0) < 1e-3);
  CHECK(rel_diff(fit.eta_fit, 0.1) < 1e-3);
  CHECK(fit.residual_norm >= 0.0);
  CHECK(fit.residual_norm < 1e-6);

  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double g = 0.5 + 4.5 * u(gen), eta = 0.01 + 0.49 * u(gen);
    const auto f = fit_gain(synthetic(g, eta, 20));
    CAPTURE(g);
    CAPTURE(eta);
    CHECK(rel_diff(f.g_max, g) < 1e-3);
    CHECK(rel_diff(f.eta_fit, eta) < 1e-3);
  }
}

TEST_CASE("raw power mode and reordering") {
  auto d = synthetic(1.7, 0.2, 25, 0.01, 3);
  for (auto& p : d.points) p.power *= 0.35;  // watts
  d.power_mode = PowerMode::raw;
  const auto a = fit_gain(d);
  std::mt19937_64 gen(1);
  std::shuffle(d.points.begin(), d.points.end(), gen);
  const auto b = fit_gain(d);
  CHECK(rel_diff(a.g_max, b.g_max) <= 1e-6);
  CHECK(rel_diff(a.eta_fit, b.eta_fit) <= 1e-6);
  CHECK(a.g_max_halfwidth > 0.0);
  CHECK(std::isfinite(a.eta_halfwidth));
  CHECK(rel_diff(a.g_max, 1.7) < 0.05);
}

TEST_CASE("degenerate data") {
  CalibrationDataset d;
  for (int i = 1; i <= 8; ++i) d.points.push_back({0.1 * i, 0.4, 1.0});
  CHECK_THROWS_AS(fit_gain(d), FitError);
}

TEST_CASE("calibration csv") {
  auto d = synthetic(2.0, 0.1, 6);
  std::stringstream s;
  write_calibration_csv(s, d);
  const auto back = read_calibration_csv(s);
  CHECK(back.power_mode == PowerMode::normalized);
  REQUIRE(back.points.size() == 6);
  CHECK(back.points[3].counts == d.points[3].counts);

  std::stringstream w("power,counts,weight\n1,0.1,2\n2,0.2,2\n3,0.3,1\n4,0.35,1\n");
  const auto weighted = read_calibration_csv(w);
  CHECK(weighted.weight_mode == WeightMode::explicit_weights);
  CHECK(weighted.points[0].weight == 2.0);
  CHECK(format_fit_report(fit_gain(synthetic(2.0, 0.1, 20))).find("\"g_max\"") != std::string::npos);
}
