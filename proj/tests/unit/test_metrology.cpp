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
#include <numbers>
#include <random>

#include "qiopa/error.hpp"
#include "qiopa/metrology.hpp"
#include "support.hpp"

using namespace qiopa;
using qiopa::testing::rel_diff;
using std::numbers::pi;

namespace {

ChannelParams channel(double p, double eta, double vs = 1.0) {
  ChannelParams c;
  c.p = p;
  c.eta = eta;
  c.seed_visibility = vs;
  return c;
}

// Closed-form sensitivity rebuilt from the high-loss expansion pieces:
// numerator (p eta c)^2, denominator as a polynomial in eta.
double eq1_squared(double g, double p, double eta) {
  const long double n = std::sinh(static_cast<long double>(g)) * std::sinh(static_cast<long double>(g));
  const long double c = 2 * n + 1;
  const long double a2 = p * n * (4 * c + 2) + 2 * n * c;
  const long double a1 = p * c + 2 * n;
  const long double num = static_cast<long double>(p) * p * eta * eta * c * c;
  return static_cast<double>(num / (a2 * eta * eta + a1 * eta));
}

// Brute force Fisher information over {+, -, none} for an unamplified probe.
double three_outcome_fisher(double phi, double p, double eta) {
  const double t = p * eta;
  const double plus = t * std::cos(phi / 2) * std::cos(phi / 2);
  const double minus = t * std::sin(phi / 2) * std::sin(phi / 2);
  const double dplus = -t * std::sin(phi) / 2;
  double f = 0.0;
  if (plus > 0) f += dplus * dplus / plus;
  if (minus > 0) f += dplus * dplus / minus;
  return f;
}

}  // namespace

TEST_CASE("single photon sensitivity") {
  CHECK(sensitivity_single_photon(1.0, 100.0) == 10.0);
  CHECK(sensitivity_single_photon(0.15 * 3e-4) == doctest::Approx(6.708e-3).epsilon(1e-4));
  CHECK(sensitivity_single_photon(0.25, 4.0) == 1.0);
  CHECK_THROWS_AS(sensitivity_single_photon(0.0), DomainError);
}

TEST_CASE("amplified closed form") {
  const auto g0 = GainParams::from_gain(0.0);
  for (double p : {0.1, 0.5, 1.0}) {
    for (double eta : {1e-4, 0.3, 1.0}) {
      CHECK(std::abs(enhancement(g0, p, eta) - 1.0) <= 1e-12);
      CHECK(rel_diff(sensitivity_amplified_closed_form(g0, p, eta, 7.0), sensitivity_single_photon(p * eta, 7.0)) <= 1e-12);
    }
  }
  const auto g45 = GainParams::from_gain(4.5);
  const double s = sensitivity_amplified_closed_form(g45, 0.15, 3e-4);
  CHECK(rel_diff(s * s, eq1_squared(4.5, 0.15, 3e-4)) < 1e-12);
  CHECK(enhancement(g45, 0.15, 3e-4) == doctest::Approx(222.652).epsilon(1e-5));

  const auto g3 = GainParams::from_gain(3.0);
  const double s3 = sensitivity_amplified_closed_form(g3, 0.2, 1e-5);
  CHECK(rel_diff(s3 * s3, 2 * g3.nbar * 1e-5 * 0.2 / (1 + 1 / 0.2)) < 0.01);

  for (double g : {0.5, 2.0, 4.5}) {
    const auto gp = GainParams::from_gain(g);
    const double s1 = sensitivity_amplified_closed_form(gp, 0.3, 0.01, 1.0);
    const double s2 = sensitivity_amplified_closed_form(gp, 0.3, 0.01, 1000.0);
    CHECK(rel_diff(s2 / s1, std::sqrt(1000.0)) <= 1e-12);
  }
}

TEST_CASE("no enhancement without gain") {
  const auto g0 = GainParams::from_gain(0.0);
  for (double p : {0.01, 0.15, 0.5, 1.0}) {
    for (double eta : {1e-6, 3e-4, 0.1, 0.49, 1.0}) {
      CHECK(std::abs(enhancement(g0, p, eta) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("enhancement saturation") {
  const double lim = enhancement_limit(0.5, 0.01);
  CHECK(lim == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(enhancement_limit(1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  double prev = 0.0;
  for (double g : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const double e = enhancement(GainParams::from_gain(g), 0.5, 0.01);
    CHECK(e > prev);
    CHECK(e < lim);
    prev = e;
  }
  CHECK(rel_diff(enhancement(GainParams::from_gain(8.0), 0.5, 0.01), lim) < 0.01);
}

TEST_CASE("critical injection") {
  CHECK(critical_injection(0.2).p_crit == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto third = critical_injection(1.0 / 3.0);
  CHECK(third.p_crit == 1.0);
  CHECK_FALSE(third.achievable);
  CHECK(critical_injection(1e-9).p_crit == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(critical_injection(0.1).achievable);
  CHECK_THROWS_AS(critical_injection(0.5), DomainError);
  CHECK_THROWS_AS(critical_injection(0.0), DomainError);
  for (double eta : {0.01, 0.1, 0.2, 0.3}) {
    const double pc = critical_injection(eta).p_crit;
    CHECK(std::abs(enhancement_limit(std::min(pc, 1.0), eta) - 1.0) <= (pc <= 1.0 ? 1e-12 : 1.0));
  }
}

TEST_CASE("moment sensitivity reproduces the closed form") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    const double g = 3.0 * u(gen), p = 0.01 + 0.99 * u(gen), eta = std::pow(10.0, -5.0 * u(gen));
    const auto gp = GainParams::from_gain(g);
    const double s = moment_sensitivity(pi / 2, gp, channel(p, eta));
    CHECK(rel_diff(s, sensitivity_amplified_closed_form(gp, p, eta)) < 1e-6);
  }
}

TEST_CASE("sensitivity report") {
  auto c = channel(0.15, 3e-4);
  c.trials = 1000;
  const auto r = sensitivity_report(GainParams::from_gain(4.5), c);
  CHECK(r.s_single > 0);
  CHECK(r.s_amplified > 0);
  CHECK(rel_diff(r.enhancement, (r.s_amplified / r.s_single) * (r.s_amplified / r.s_single)) < 1e-12);
  CHECK(rel_diff(r.enhancement, enhancement(GainParams::from_gain(4.5), 0.15, 3e-4)) < 1e-12);
  CHECK(r.high_loss_valid == false);
  CHECK(sensitivity_report(GainParams::from_gain(2.0), channel(0.2, 1e-5)).high_loss_valid);
}

TEST_CASE("Fisher information without amplification") {
  const auto g0 = GainParams::from_gain(0.0);
  for (double phi : {0.3, 1.0, pi / 2, 2.5}) {
    const auto f = classical_fisher_information(phi, g0, channel(1.0, 1.0));
    CHECK(f.method == FisherMethod::exact);
    CHECK(f.value == doctest::Approx(1.0).epsilon(1e-12));
    for (auto [p, eta] : {std::pair{0.5, 0.4}, std::pair{0.2, 0.01}}) {
      const auto fe = classical_fisher_information(phi, g0, channel(p, eta));
      CHECK(fe.value == doctest::Approx(three_outcome_fisher(phi, p, eta)).epsilon(1e-12));
      CHECK(fe.value == doctest::Approx(p * eta).epsilon(1e-12));
    }
  }
  // At the fringe extremes one outcome has P = P' = 0; the curvature limit keeps F = 1.
  for (double phi : {0.0, pi}) {
    const auto f = classical_fisher_information(phi, g0, channel(1.0, 1.0));
    CHECK(f.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.excluded_mass == 0.0);
  }
}

TEST_CASE("Fisher information exact and gaussian paths") {
  const auto gp = GainParams::from_gain(1.0);
  const auto c = channel(0.5, 0.01);
  const auto ex = classical_fisher_information(pi / 2, gp, c, FisherMethod::exact);
  const auto ga = classical_fisher_information(pi / 2, gp, c, FisherMethod::gaussian);
  CHECK(ex.method == FisherMethod::exact);
  CHECK(ga.method == FisherMethod::gaussian);
  CHECK(ga.gaussian_valid);
  CHECK(rel_diff(ex.value, ga.value) < 0.02);

  const auto big = classical_fisher_information(pi / 2, GainParams::from_gain(8.0), channel(0.5, 0.01));
  CHECK(big.method == FisherMethod::gaussian);
  CHECK_THROWS_AS(classical_fisher_information(pi / 2, GainParams::from_gain(8.0), channel(0.5, 0.01), FisherMethod::exact),
                  RegimeError);
}

TEST_CASE("Cramer-Rao sanity on an exact grid") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const auto gp = GainParams::from_gain(1.5 * u(gen));
    const auto c = channel(0.05 + 0.95 * u(gen), 0.001 + 0.5 * u(gen), 0.5 + 0.5 * u(gen));
    const double phi = 0.2 + 2.7 * u(gen);
    const auto r = fisher_report(phi, gp, c, FisherMethod::exact);
    CHECK(r.classical_fisher >= 0.0);
    CHECK(r.cr_ratio <= 1.0 + 1e-9);
  }
}

TEST_CASE("high-loss quantum Fisher information") {
  const auto g45 = GainParams::from_gain(4.5);
  const auto h = quantum_fisher_highloss(g45, 0.15, 3e-4);
  CHECK(h.value == doctest::Approx(0.02377).epsilon(1e-3));
  CHECK(h.valid == false);
  for (double p : {0.05, 0.3, 1.0}) {
    CHECK(rel_diff(quantum_fisher_highloss(g45, p, 1e-5).value, quantum_fisher_highloss_product_form(g45, p, 1e-5)) <= 1e-12);
  }
  CHECK(rel_diff(quantum_fisher_highloss(g45, 1.0, 1e-5).value, g45.nbar * 1e-5) <= 1e-12);
  const auto g3 = GainParams::from_gain(3.0);
  for (double eta : {1e-5, 1e-6, 1e-7}) {
    const double s = sensitivity_amplified_closed_form(g3, 0.2, eta);
    CHECK(std::abs(s * s / quantum_fisher_highloss(g3, 0.2, eta).value - 1.0) < 0.01);
  }
}

TEST_CASE("threshold readout sensitivity") {
  CHECK(of_sensitivity(0.5, 0.0, pi / 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(of_sensitivity(0.5, 0.1, 0.0) == 0.0);
  CHECK_THROWS_AS(of_sensitivity(0.0, 0.0, pi / 2), DomainError);
  CHECK_THROWS_AS(of_sensitivity(0.1, 0.2, pi / 2), DomainError);
  for (auto [imax, imin] : {std::pair{0.3, 0.1}, std::pair{1e-3, 4e-4}, std::pair{0.9, 0.0}}) {
    OFStatistics st;
    st.i_max = imax;
    st.i_min = imin;
    st.visibility = (imax - imin) / (imax + imin);
    st.r_mean = imax + imin;
    CHECK(rel_diff(of_sensitivity(st, pi / 2), st.visibility * std::sqrt(st.r_mean)) < 1e-12);
  }
  CHECK(of_sensitivity_optimal(1.0, 1.0) == 1.0);
  CHECK(of_sensitivity_optimal(0.53, 3.6e-4) == doctest::Approx(0.01006).epsilon(1e-3));
  CHECK(of_sensitivity_optimal(0.53, 3.6e-4, 1e4) == doctest::Approx(100 * of_sensitivity_optimal(0.53, 3.6e-4)).epsilon(1e-15));
  CHECK(of_enhancement(0.5, 0.2, 0.1, 0.5) == doctest::Approx(0.25 * 0.2 / 0.05));
}
