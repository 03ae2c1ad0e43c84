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

#include "qiopa/metrology.hpp"

#include <algorithm>
#include <cmath>

#include "qiopa/error.hpp"

namespace qiopa {

namespace {

// Above this many mean pairs the sector tables alone outgrow memory.
constexpr double kExactFisherMaxNbar = 1e4;

void check_loss(double p, double eta) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("injection probability p must be in (0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("transmission eta must be in (0, 1]");
}

void check_trials(double n) {
  if (!(n >= 1.0)) throw DomainError("trial count N must be >= 1");
}

FisherResult exact_fisher(double phi, const GainParams& gain, const ChannelParams& channel,
                          const TruncationPolicy& policy) {
  if (gain.nbar > kExactFisherMaxNbar) {
    throw RegimeError("exact Fisher sum: gain too large for tabulated sectors; use the gaussian method");
  }
  const auto sectors = SectorPair::build(gain, policy);
  const auto source = build_source_law(phi, sectors, channel);
  const DetectedJointLaw law(source, channel.eta);
  const std::int64_t ext = law.extent();
  FisherResult out;
  out.method = FisherMethod::exact;
  out.tail_mass = law.tail_mass();
  double sum = 0.0;
  for (std::int64_t a = 0; a < ext; ++a) {
    for (std::int64_t b = 0; b < ext; ++b) {
      const double d = law.dprobability_dphi(a, b);
      const double pr = law.probability(a, b);
      if (pr > 0.0) {
        sum += d * d / pr;
      } else if (d == 0.0) {
        // Double zero of P: (P')^2 / P tends to 2 P''.
        sum += 2.0 * std::max(0.0, law.d2probability_dphi2(a, b));
      } else {
        out.excluded_mass += std::abs(d);
      }
    }
  }
  out.value = sum;
  return out;
}

}  // namespace

double sensitivity_single_photon(double t, double n_trials) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("transmission t must be in (0, 1]");
  check_trials(n_trials);
  return std::sqrt(t * n_trials);
}

double sensitivity_amplified_closed_form(const GainParams& gain, double p, double eta,
                                         double n_trials) {
  check_loss(p, eta);
  check_trials(n_trials);
  const double n = gain.nbar, c = gain.c;
  const double denom =
      eta * eta * (p * n * (4.0 * c + 2.0) + 2.0 * n * c) + eta * (p * c + 2.0 * n);
  return std::sqrt(n_trials) * p * eta * c / std::sqrt(denom);
}

double enhancement(const GainParams& gain, double p, double eta) {
  check_loss(p, eta);
  // S^2 / (p eta) with the common factors cancelled, so E(g=0) is exactly 1.
  const double n = gain.nbar, c = gain.c;
  return p * c * c / (eta * (p * n * (4.0 * c + 2.0) + 2.0 * n * c) + (p * c + 2.0 * n));
}

double enhancement_limit(double p, double eta) {
  check_loss(p, eta);
  return p / (eta * (2.0 * p + 1.0));
}

CriticalInjection critical_injection(double eta) {
  if (!(eta > 0.0 && eta < 0.5)) {
    throw DomainError("critical injection needs eta in (0, 0.5)");
  }
  // Reciprocal form: lands on 1 exactly at the double nearest 1/3.
  CriticalInjection out;
  out.p_crit = 1.0 / (1.0 / eta - 2.0);
  out.achievable = out.p_crit < 1.0;
  return out;
}

bool high_loss_regime(const GainParams& gain, double eta) {
  return eta * squeezed_single_photon_mean(gain) < 0.1;
}

double moment_sensitivity(double phi, const GainParams& gain, const ChannelParams& channel) {
  const auto m = detected_moments(phi, gain, channel);
  const double var = m.var_difference();
  if (!(var > 0.0)) throw DegenerateStatisticsError("moment sensitivity: zero variance of D");
  const double slope = m.dmean_plus_dphi - m.dmean_minus_dphi;
  return std::abs(slope) / std::sqrt(var) * std::sqrt(static_cast<double>(channel.trials));
}

SensitivityReport sensitivity_report(const GainParams& gain, const ChannelParams& channel) {
  channel.validate();
  SensitivityReport r;
  const double n = static_cast<double>(channel.trials);
  r.s_single = sensitivity_single_photon(channel.t(), n);
  r.s_amplified = sensitivity_amplified_closed_form(gain, channel.p, channel.eta, n);
  r.enhancement = (r.s_amplified / r.s_single) * (r.s_amplified / r.s_single);
  r.high_loss_valid = high_loss_regime(gain, channel.eta);
  return r;
}

const char* to_string(FisherMethod m) {
  switch (m) {
    case FisherMethod::automatic: return "automatic";
    case FisherMethod::exact: return "exact";
    case FisherMethod::gaussian: return "gaussian";
  }
  return "automatic";
}

double gaussian_fisher_information(double phi, const GainParams& gain,
                                   const ChannelParams& channel) {
  const auto m = detected_moments(phi, gain, channel);
  const double a = m.var_plus, b = m.cov, d = m.var_minus;
  const double x = m.dmean_plus_dphi, y = m.dmean_minus_dphi;
  const double det = a * d - b * b;
  if (det > 1e-12 * a * d) {
    return (d * x * x - 2.0 * b * x * y + a * y * y) / det;
  }
  // Singular covariance: fall back to the difference variable alone.
  const double var = m.var_difference();
  if (!(var > 0.0)) return 0.0;
  return (x - y) * (x - y) / var;
}

FisherResult classical_fisher_information(double phi, const GainParams& gain,
                                          const ChannelParams& channel, FisherMethod method,
                                          const TruncationPolicy& policy) {
  channel.validate();
  if (method != FisherMethod::gaussian) {
    try {
      return exact_fisher(phi, gain, channel, policy);
    } catch (const RegimeError&) {
      if (method == FisherMethod::exact) throw;
    } catch (const TruncationError&) {
      if (method == FisherMethod::exact) throw;
    }
  }
  FisherResult out;
  out.method = FisherMethod::gaussian;
  out.value = gaussian_fisher_information(phi, gain, channel);
  const auto m = detected_moments(phi, gain, channel);
  out.gaussian_valid =
      high_loss_regime(gain, channel.eta) || std::min(m.mean_plus, m.mean_minus) >= 20.0;
  return out;
}

QuantumFisherHighLoss quantum_fisher_highloss(const GainParams& gain, double p, double eta) {
  check_loss(p, eta);
  QuantumFisherHighLoss out;
  out.value = 2.0 * gain.nbar * eta * p * p / (p + 1.0);
  out.valid = high_loss_regime(gain, eta);
  return out;
}

double quantum_fisher_highloss_product_form(const GainParams& gain, double p, double eta) {
  check_loss(p, eta);
  return 2.0 * gain.nbar * eta * p / (1.0 + 1.0 / p);
}

FisherReport fisher_report(double phi, const GainParams& gain, const ChannelParams& channel,
                           FisherMethod method) {
  const auto f = classical_fisher_information(phi, gain, channel, method);
  FisherReport r;
  r.phi = phi;
  r.classical_fisher = f.value;
  r.method = f.method;
  r.excluded_mass = f.excluded_mass;
  const auto h = quantum_fisher_highloss(gain, channel.p, channel.eta);
  r.quantum_fisher_highloss = h.value;
  r.high_loss_valid = h.valid;
  r.h_single = channel.t();
  ChannelParams single = channel;
  single.trials = 1;
  const double s = moment_sensitivity(phi, gain, single);
  r.s_squared = s * s;
  r.cr_ratio = f.value > 0.0 ? r.s_squared / f.value : std::nan("");
  return r;
}

double of_sensitivity(double i_max, double i_min, double phi) {
  if (!(i_min >= 0.0 && i_max >= i_min)) {
    throw DomainError("of_sensitivity needs 0 <= I_min <= I_max");
  }
  const double half_cos = std::cos(phi / 2.0);
  const double denom = (i_max - i_min) * half_cos * half_cos + i_min;
  if (!(denom > 0.0)) throw DomainError("of_sensitivity: zero denominator");
  return std::abs(std::sin(phi) * (i_max - i_min)) / std::sqrt(denom);
}

double of_sensitivity(const OFStatistics& stats, double phi) {
  return of_sensitivity(stats.i_max / 2.0, stats.i_min / 2.0, phi);
}

double of_sensitivity_optimal(double visibility, double r_mean, double n_trials) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw DomainError("visibility must be in [0, 1]");
  if (!(r_mean >= 0.0 && r_mean <= 1.0)) throw DomainError("R_mean must be in [0, 1]");
  check_trials(n_trials);
  return visibility * std::sqrt(r_mean) * std::sqrt(n_trials);
}

double of_enhancement(double visibility, double r_mean, double p, double eta) {
  check_loss(p, eta);
  const double s = of_sensitivity_optimal(visibility, r_mean);
  return s * s / (p * eta);
}

}  // namespace qiopa
