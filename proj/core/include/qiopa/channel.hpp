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

// Loss budget t = p * eta around the amplifier.
//
// Injection (p) decides whether the probe photon reaches the amplifier at all;
// without it the amplifier only sees vacuum. Seed impurity is an admixture of
// the orthogonal probe (phase phi + pi) with weight (1 - V_s) / 2. Detection
// loss (eta) acts after amplification as independent binomial thinning of
// each mode.
//
// Collapsing the three source components onto the three product laws gives
//   odd (x) even   with weight  p (1 + V_s cos phi) / 2
//   even (x) odd   with weight  p (1 - V_s cos phi) / 2
//   even (x) even  with weight  1 - p
// which is what the samplers and the exact laws below work with.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "qiopa/fock.hpp"
#include "qiopa/rng.hpp"

namespace qiopa {

struct ChannelParams {
  double p = 1.0;                ///< injection probability
  double eta = 1.0;              ///< detection transmission
  double seed_visibility = 1.0;  ///< V_s
  std::int64_t trials = 1;       ///< N

  double t() const { return p * eta; }
  /// Throws DomainError when a field is out of range or t = 0.
  void validate() const;
};

/// Inverse-CDF table over the nonzero support of a FockDistribution,
/// renormalized to the tabulated mass.
class FockSampler {
 public:
  explicit FockSampler(const FockDistribution& dist);
  std::int64_t sample(double u) const;
  std::size_t support_size() const { return support_.size(); }

 private:
  std::vector<std::int64_t> support_;
  std::vector<double> cdf_;
};

/// The three product laws making up the source.
enum class ProductLaw { odd_even = 0, even_odd = 1, even_even = 2 };

struct SourceComponent {
  const char* name;
  double weight;
};

/// Photon-number law entering detection: mixture of the amplified probe at
/// phi, at phi + pi, and amplified vacuum. Immutable and shareable.
class SourceLaw {
 public:
  SourceLaw(double phi, const GainParams& gain, const ChannelParams& channel, SharedFock odd,
            SharedFock even);

  double phi() const { return phi_; }
  const GainParams& gain() const { return gain_; }
  const ChannelParams& channel() const { return channel_; }
  const FockDistribution& odd() const { return *odd_; }
  const FockDistribution& even() const { return *even_; }
  SharedFock odd_ptr() const { return odd_; }
  SharedFock even_ptr() const { return even_; }

  /// Non-zero source components: probe, flipped probe, vacuum.
  std::vector<SourceComponent> components() const;
  /// Weights of the odd(x)even, even(x)odd, even(x)even product laws.
  const std::array<double, 3>& product_weights() const { return product_weights_; }
  double weight(ProductLaw law) const { return product_weights_[static_cast<int>(law)]; }

  double probability(std::int64_t n_plus, std::int64_t n_minus) const;
  /// Pre-detection <n+ - n->, from the stored distributions.
  double expected_difference() const;
  std::pair<double, double> mode_means() const;

  const FockSampler& odd_sampler() const { return *odd_sampler_; }
  const FockSampler& even_sampler() const { return *even_sampler_; }

 private:
  double phi_;
  GainParams gain_;
  ChannelParams channel_;
  SharedFock odd_, even_;
  std::shared_ptr<const FockSampler> odd_sampler_, even_sampler_;
  std::array<double, 3> product_weights_{};
};

/// Distributions for one gain, built once and shared by every phase point.
struct SectorPair {
  GainParams gain;
  SharedFock odd;
  SharedFock even;

  static SectorPair build(const GainParams& gain, const TruncationPolicy& policy = {});
};

SourceLaw build_source_law(double phi, const GainParams& gain, const ChannelParams& channel,
                           const TruncationPolicy& policy = {});
SourceLaw build_source_law(double phi, const SectorPair& sectors, const ChannelParams& channel);

/// Largest n_max accepted by binomial_thinning_exact.
inline constexpr std::int64_t kExactThinningMaxN = 4096;
/// Work budget (input terms x output terms) for the truncated transform.
inline constexpr std::int64_t kExactThinningWork = (kExactThinningMaxN + 1) * (kExactThinningMaxN + 1);

/// P'(m) = sum_n P(n) C(n,m) eta^m (1-eta)^(n-m) for every m <= n_max, in the
/// log domain. Throws RegimeError above kExactThinningMaxN.
FockDistribution binomial_thinning_exact(const FockDistribution& dist, double eta);

/// Same transform, but stops once the not-yet-emitted output mass drops
/// below `output_tail`; the trimmed mass is added to tail_mass(). Throws
/// RegimeError if the work budget is exceeded first.
FockDistribution binomial_thinning_truncated(const FockDistribution& dist, double eta,
                                             double output_tail = 1e-14);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// mean' = eta mean, var' = eta^2 var + eta (1 - eta) mean.
Moments thinned_moments(double mean, double variance, double eta);

/// Analytic first and second moments of the detected counts (m+, m-).
struct DetectedMoments {
  double mean_plus = 0.0;
  double mean_minus = 0.0;
  double var_plus = 0.0;
  double var_minus = 0.0;
  double cov = 0.0;
  double dmean_plus_dphi = 0.0;
  double dmean_minus_dphi = 0.0;

  double mean_difference() const { return mean_plus - mean_minus; }
  double var_difference() const { return var_plus + var_minus - 2.0 * cov; }
};

DetectedMoments detected_moments(double phi, const GainParams& gain, const ChannelParams& channel);

/// Exactly thinned joint law of (m+, m-) with its phase derivative.
class DetectedJointLaw {
 public:
  DetectedJointLaw(const SourceLaw& source, double eta, double output_tail = 1e-14);

  double probability(std::int64_t m_plus, std::int64_t m_minus) const;
  /// d/dphi of probability(); only the product weights depend on phi.
  double dprobability_dphi(std::int64_t m_plus, std::int64_t m_minus) const;
  double d2probability_dphi2(std::int64_t m_plus, std::int64_t m_minus) const;
  std::int64_t extent() const;  ///< exclusive bound on m+ and m-
  double tail_mass() const { return odd_.tail_mass() + even_.tail_mass(); }
  const FockDistribution& thinned_odd() const { return odd_; }
  const FockDistribution& thinned_even() const { return even_; }

 private:
  FockDistribution odd_, even_;
  std::array<double, 3> w_{};
  std::array<double, 3> dw_{};
  std::array<double, 3> d2w_{};
};

/// Draws one detected (m+, m-) pair: product law by weight, photon numbers by
/// inverse CDF, then independent binomial thinning of each mode.
std::pair<std::int64_t, std::int64_t> sample_detected_counts(const SourceLaw& source, double eta,
                                                             CounterRng& rng);

/// Weights, pre-detection means and variances for run manifests.
struct SourceSummary {
  double phi = 0.0;
  std::array<double, 3> product_weights{};
  double mean_plus = 0.0, mean_minus = 0.0;
  double var_plus = 0.0, var_minus = 0.0;
  double tail_mass = 0.0;
};

SourceSummary summarize(const SourceLaw& source);

}  // namespace qiopa
