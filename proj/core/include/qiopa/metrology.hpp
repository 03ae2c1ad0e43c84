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

// Phase sensitivities, enhancement over the bare single-photon probe, and
// Fisher information of the photon-number difference measurement.
//
// All sensitivities are per trial unless an explicit trial count N is passed;
// S is the inverse phase uncertainty, so larger is better.

#pragma once

#include <cstdint>
#include <string>

#include "qiopa/channel.hpp"
#include "qiopa/detection.hpp"
#include "qiopa/fock.hpp"

namespace qiopa {

/// sqrt(t N).
double sensitivity_single_photon(double t, double n_trials = 1.0);

/// Closed-form sensitivity of the amplified probe read out by n+ - n- at
/// phi = pi/2, with ideal seed visibility.
double sensitivity_amplified_closed_form(const GainParams& gain, double p, double eta,
                                         double n_trials = 1.0);

/// (S_ampl / S_1phot)^2; independent of N.
double enhancement(const GainParams& gain, double p, double eta);

/// Large-gain limit p / (eta (2p + 1)).
double enhancement_limit(double p, double eta);

struct CriticalInjection {
  double p_crit = 0.0;
  bool achievable = true;  ///< false when p_crit >= 1
};

/// p_crit = eta / (1 - 2 eta). Throws DomainError for eta outside (0, 0.5).
CriticalInjection critical_injection(double eta);

/// True when eta <n+-> < 0.1 for the brighter mode.
bool high_loss_regime(const GainParams& gain, double eta);

/// |d<D>/dphi| / sqrt(Var D) from moment propagation, times sqrt(N).
double moment_sensitivity(double phi, const GainParams& gain, const ChannelParams& channel);

struct SensitivityReport {
  double s_single = 0.0;
  double s_amplified = 0.0;
  double enhancement = 0.0;
  bool high_loss_valid = false;
};

SensitivityReport sensitivity_report(const GainParams& gain, const ChannelParams& channel);

enum class FisherMethod { automatic, exact, gaussian };
const char* to_string(FisherMethod m);

struct FisherResult {
  double value = 0.0;
  FisherMethod method = FisherMethod::exact;  ///< exact or gaussian, never automatic
  double excluded_mass = 0.0;  ///< derivative mass on zero-probability outcomes
  double tail_mass = 0.0;      ///< truncated probability of the thinned law
  bool gaussian_valid = true;  ///< only meaningful for the gaussian method
};

/// Fisher information of the (m+, m-) counting measurement. The automatic
/// method uses the exact sum when the thinned law fits the work budget and
/// falls back to the Gaussian form otherwise. Requesting exact outside its
/// regime throws RegimeError.
FisherResult classical_fisher_information(double phi, const GainParams& gain,
                                          const ChannelParams& channel,
                                          FisherMethod method = FisherMethod::automatic,
                                          const TruncationPolicy& policy = {});

/// d mu^T Sigma^-1 d mu for the bivariate normal with the detected moments.
double gaussian_fisher_information(double phi, const GainParams& gain,
                                   const ChannelParams& channel);

struct QuantumFisherHighLoss {
  double value = 0.0;
  bool valid = false;  ///< high-loss approximation regime
};

/// 2 nbar eta p^2 / (p + 1).
QuantumFisherHighLoss quantum_fisher_highloss(const GainParams& gain, double p, double eta);
/// Same quantity written as 2 nbar eta p / (1 + 1/p).
double quantum_fisher_highloss_product_form(const GainParams& gain, double p, double eta);

struct FisherReport {
  double phi = 0.0;
  double classical_fisher = 0.0;
  double quantum_fisher_highloss = 0.0;
  double h_single = 0.0;  ///< eta p
  double s_squared = 0.0;
  double cr_ratio = 0.0;  ///< s_squared / classical_fisher
  FisherMethod method = FisherMethod::exact;
  double excluded_mass = 0.0;
  bool high_loss_valid = false;
};

FisherReport fisher_report(double phi, const GainParams& gain, const ChannelParams& channel,
                           FisherMethod method = FisherMethod::automatic);

/// Sensitivity of the dichotomic threshold readout from per-port fringe
/// extremes. Each port carries half of a +1 rate, so an ideal photon has
/// I_max = 0.5 and I_min = 0. Throws DomainError on a zero denominator.
double of_sensitivity(double i_max, double i_min, double phi);

/// Uses the fitted unconditional +1 rates of the statistics.
double of_sensitivity(const OFStatistics& stats, double phi);

/// V sqrt(R_mean) sqrt(N).
double of_sensitivity_optimal(double visibility, double r_mean, double n_trials = 1.0);

/// V^2 R_mean / (p eta).
double of_enhancement(double visibility, double r_mean, double p, double eta);

}  // namespace qiopa
