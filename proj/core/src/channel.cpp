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

#include "qiopa/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qiopa/error.hpp"
#include "qiopa/mc.hpp"

namespace qiopa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Half-angle form: 1 +/- V cos(phi) = (1 - V) + 2 V cos^2 or sin^2 (phi/2). A
// weight only vanishes where it truly does, not through 1 + cos(pi) rounding.
std::array<double, 3> product_weights_for(double phi, const ChannelParams& ch) {
  const double vs = ch.seed_visibility;
  const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
  return {0.5 * ch.p * ((1.0 - vs) + 2.0 * vs * c * c),
          0.5 * ch.p * ((1.0 - vs) + 2.0 * vs * s * s), 1.0 - ch.p};
}

std::array<double, 3> product_weight_derivatives(double phi, const ChannelParams& ch) {
  const double d = -0.5 * ch.p * ch.seed_visibility * std::sin(phi);
  return {d, -d, 0.0};
}

std::array<double, 3> product_weight_second_derivatives(double phi, const ChannelParams& ch) {
  const double d = -0.5 * ch.p * ch.seed_visibility * std::cos(phi);
  return {d, -d, 0.0};
}

// Core log-domain thinning. Emits P'(0..m_last) where m_last is the first m
// at which the unemitted mass is <= output_tail (or the input support ends).
FockDistribution thin(const FockDistribution& dist, double eta, double output_tail,
                      std::int64_t work_budget, const char* who) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError(std::string(who) + ": eta outside [0, 1]");
  const auto lp = dist.log_probs();
  const auto probs = dist.probs();
  const std::int64_t size = dist.size();
  double input_mass = 0.0;
  for (double p : probs) input_mass += p;

  if (eta == 1.0) {
    return FockDistribution::from_log_probs(std::vector<double>(lp.begin(), lp.end()),
                                            dist.tail_mass());
  }
  if (eta == 0.0) {
    return FockDistribution::from_probs({input_mass}, dist.tail_mass());
  }

  std::vector<double> log_fact(static_cast<std::size_t>(size) + 1);
  log_fact[0] = 0.0;
  for (std::int64_t n = 1; n <= size; ++n) {
    log_fact[static_cast<std::size_t>(n)] = std::lgamma(static_cast<double>(n) + 1.0);
  }
  const double log_eta = std::log(eta);
  const double log_keep_out = std::log1p(-eta);

  std::vector<double> out;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(size));
  double emitted = 0.0;
  std::int64_t work = 0;
  for (std::int64_t m = 0; m < size; ++m) {
    work += size - m;
    if (work > work_budget) {
      throw RegimeError(std::string(who) + ": exact thinning exceeds the work budget (input size " +
                        std::to_string(size) +
                        "); use thinned_moments or the sampling path instead");
    }
    terms.clear();
    double top = kNegInf;
    const double lf_m = log_fact[static_cast<std::size_t>(m)];
    for (std::int64_t n = m; n < size; ++n) {
      const double l = lp[static_cast<std::size_t>(n)];
      if (l == kNegInf) continue;
      const double t = l + log_fact[static_cast<std::size_t>(n)] - lf_m -
                       log_fact[static_cast<std::size_t>(n - m)] + static_cast<double>(m) * log_eta +
                       static_cast<double>(n - m) * log_keep_out;
      terms.push_back(t);
      top = std::max(top, t);
    }
    double value = kNegInf;
    if (top != kNegInf) {
      double s = 0.0;
      for (double t : terms) s += std::exp(t - top);
      value = top + std::log(s);
    }
    out.push_back(value);
    emitted += std::exp(value);
    if (output_tail > 0.0 && input_mass - emitted <= output_tail) break;
  }
  const double trimmed = std::max(0.0, input_mass - emitted);
  return FockDistribution::from_log_probs(
      std::move(out), dist.tail_mass() + (output_tail > 0.0 ? trimmed : 0.0));
}

}  // namespace

void ChannelParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("injection probability p must lie in [0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("detection transmission eta must lie in (0, 1]");
  if (!(seed_visibility >= 0.0 && seed_visibility <= 1.0)) {
    throw DomainError("seed visibility must lie in [0, 1]");
  }
  if (trials < 1) throw DomainError("trial budget N must be >= 1");
}

FockSampler::FockSampler(const FockDistribution& dist) {
  const auto probs = dist.probs();
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (probs[n] <= 0.0) continue;
    acc += probs[n];
    support_.push_back(static_cast<std::int64_t>(n));
    cdf_.push_back(acc);
  }
  if (support_.empty()) throw DomainError("FockSampler: distribution has no mass");
}

std::int64_t FockSampler::sample(double u) const {
  const double target = u * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.end()) --it;
  return support_[static_cast<std::size_t>(it - cdf_.begin())];
}

SourceLaw::SourceLaw(double phi, const GainParams& gain, const ChannelParams& channel,
                     SharedFock odd, SharedFock even)
    : phi_(reduce_phase(phi)), gain_(gain), channel_(channel), odd_(std::move(odd)),
      even_(std::move(even)) {
  channel_.validate();
  if (!odd_ || !even_) throw DomainError("SourceLaw: missing sector distribution");
  odd_sampler_ = std::make_shared<const FockSampler>(*odd_);
  even_sampler_ = std::make_shared<const FockSampler>(*even_);
  product_weights_ = product_weights_for(phi_, channel_);
}

std::vector<SourceComponent> SourceLaw::components() const {
  const double p = channel_.p;
  const double vs = channel_.seed_visibility;
  std::vector<SourceComponent> out;
  const SourceComponent all[] = {{"probe", p * (1.0 + vs) / 2.0},
                                 {"orthogonal_probe", p * (1.0 - vs) / 2.0},
                                 {"vacuum", 1.0 - p}};
  for (const auto& c : all) {
    if (c.weight > 0.0) out.push_back(c);
  }
  return out;
}

double SourceLaw::probability(std::int64_t n_plus, std::int64_t n_minus) const {
  const auto& w = product_weights_;
  return w[0] * odd_->prob(n_plus) * even_->prob(n_minus) +
         w[1] * even_->prob(n_plus) * odd_->prob(n_minus) +
         w[2] * even_->prob(n_plus) * even_->prob(n_minus);
}

std::pair<double, double> SourceLaw::mode_means() const {
  const double mo = odd_->mean();
  const double me = even_->mean();
  const auto& w = product_weights_;
  return {w[0] * mo + (w[1] + w[2]) * me, w[1] * mo + (w[0] + w[2]) * me};
}

double SourceLaw::expected_difference() const {
  const auto [a, b] = mode_means();
  return a - b;
}

SectorPair SectorPair::build(const GainParams& gain, const TruncationPolicy& policy) {
  return SectorPair{gain,
                    std::make_shared<const FockDistribution>(
                        squeezed_single_photon_distribution(gain, policy)),
                    std::make_shared<const FockDistribution>(
                        squeezed_vacuum_distribution(gain, policy))};
}

SourceLaw build_source_law(double phi, const GainParams& gain, const ChannelParams& channel,
                           const TruncationPolicy& policy) {
  return build_source_law(phi, SectorPair::build(gain, policy), channel);
}

SourceLaw build_source_law(double phi, const SectorPair& sectors, const ChannelParams& channel) {
  return SourceLaw(phi, sectors.gain, channel, sectors.odd, sectors.even);
}

FockDistribution binomial_thinning_exact(const FockDistribution& dist, double eta) {
  if (dist.n_max() > kExactThinningMaxN) {
    throw RegimeError("binomial_thinning_exact: n_max " + std::to_string(dist.n_max()) +
                      " exceeds " + std::to_string(kExactThinningMaxN) +
                      "; use thinned_moments or the sampling path instead");
  }
  return thin(dist, eta, 0.0, kExactThinningWork, "binomial_thinning_exact");
}

FockDistribution binomial_thinning_truncated(const FockDistribution& dist, double eta,
                                             double output_tail) {
  if (!(output_tail > 0.0)) throw DomainError("binomial_thinning_truncated: output_tail must be > 0");
  return thin(dist, eta, output_tail, kExactThinningWork, "binomial_thinning_truncated");
}

Moments thinned_moments(double mean, double variance, double eta) {
  if (!(variance >= 0.0)) throw DomainError("thinned_moments: variance must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("thinned_moments: eta outside [0, 1]");
  return {eta * mean, eta * eta * variance + eta * (1.0 - eta) * mean};
}

DetectedMoments detected_moments(double phi, const GainParams& gain, const ChannelParams& channel) {
  channel.validate();
  const double eta = channel.eta;
  const Moments odd = thinned_moments(squeezed_single_photon_mean(gain),
                                      squeezed_single_photon_variance(gain), eta);
  const Moments even =
      thinned_moments(squeezed_vacuum_mean(gain), squeezed_vacuum_variance(gain), eta);
  const auto w = product_weights_for(phi, channel);
  const auto dw = product_weight_derivatives(phi, channel);

  // (plus-mode, minus-mode) sector moments for each product law.
  const std::array<std::pair<Moments, Moments>, 3> laws = {
      std::pair{odd, even}, std::pair{even, odd}, std::pair{even, even}};

  // Mixture moments in centered form; raw second moments cancel badly where
  // one product law carries almost all the weight.
  DetectedMoments out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& [a, b] = laws[i];
    out.mean_plus += w[i] * a.mean;
    out.mean_minus += w[i] * b.mean;
    out.dmean_plus_dphi += dw[i] * a.mean;
    out.dmean_minus_dphi += dw[i] * b.mean;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& [a, b] = laws[i];
    const double da = a.mean - out.mean_plus, db = b.mean - out.mean_minus;
    out.var_plus += w[i] * (a.variance + da * da);
    out.var_minus += w[i] * (b.variance + db * db);
    out.cov += w[i] * da * db;
  }
  return out;
}

DetectedJointLaw::DetectedJointLaw(const SourceLaw& source, double eta, double output_tail)
    : odd_(binomial_thinning_truncated(source.odd(), eta, output_tail)),
      even_(binomial_thinning_truncated(source.even(), eta, output_tail)),
      w_(source.product_weights()),
      dw_(product_weight_derivatives(source.phi(), source.channel())),
      d2w_(product_weight_second_derivatives(source.phi(), source.channel())) {}

double DetectedJointLaw::probability(std::int64_t a, std::int64_t b) const {
  return w_[0] * odd_.prob(a) * even_.prob(b) + w_[1] * even_.prob(a) * odd_.prob(b) +
         w_[2] * even_.prob(a) * even_.prob(b);
}

double DetectedJointLaw::dprobability_dphi(std::int64_t a, std::int64_t b) const {
  return dw_[0] * odd_.prob(a) * even_.prob(b) + dw_[1] * even_.prob(a) * odd_.prob(b);
}

double DetectedJointLaw::d2probability_dphi2(std::int64_t a, std::int64_t b) const {
  return d2w_[0] * odd_.prob(a) * even_.prob(b) + d2w_[1] * even_.prob(a) * odd_.prob(b);
}

std::int64_t DetectedJointLaw::extent() const { return std::max(odd_.size(), even_.size()); }

std::pair<std::int64_t, std::int64_t> sample_detected_counts(const SourceLaw& source, double eta,
                                                             CounterRng& rng) {
  const auto& w = source.product_weights();
  const double u = rng.uniform();
  const FockSampler* plus = &source.even_sampler();
  const FockSampler* minus = &source.even_sampler();
  if (u < w[0]) {
    plus = &source.odd_sampler();
  } else if (u < w[0] + w[1]) {
    minus = &source.odd_sampler();
  }
  const std::int64_t n_plus = plus->sample(rng.uniform());
  const std::int64_t n_minus = minus->sample(rng.uniform());
  return {binomial_sample(n_plus, eta, rng), binomial_sample(n_minus, eta, rng)};
}

SourceSummary summarize(const SourceLaw& source) {
  SourceSummary s;
  s.phi = source.phi();
  s.product_weights = source.product_weights();
  const double mo = source.odd().mean(), me = source.even().mean();
  const double vo = source.odd().variance(), ve = source.even().variance();
  const auto& w = s.product_weights;
  s.mean_plus = w[0] * mo + (w[1] + w[2]) * me;
  s.mean_minus = w[1] * mo + (w[0] + w[2]) * me;
  const double e2_plus = w[0] * (vo + mo * mo) + (w[1] + w[2]) * (ve + me * me);
  const double e2_minus = w[1] * (vo + mo * mo) + (w[0] + w[2]) * (ve + me * me);
  s.var_plus = e2_plus - s.mean_plus * s.mean_plus;
  s.var_minus = e2_minus - s.mean_minus * s.mean_minus;
  s.tail_mass = source.odd().tail_mass() + source.even().tail_mass();
  return s;
}

}  // namespace qiopa
