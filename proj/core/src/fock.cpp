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

#include "qiopa/fock.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "qiopa/csv.hpp"
#include "qiopa/error.hpp"

namespace qiopa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log cosh g without overflow.
double log_cosh(double g) {
  return g + std::log1p(std::exp(-2.0 * g)) - std::numbers::ln2;
}

// 2 log tanh g, accurate both near 0 and for tanh g -> 1.
double log_gamma_squared(double g) {
  const double e = std::exp(-2.0 * g);
  return 2.0 * (std::log1p(-e) - std::log1p(e));
}

// Both sectors share the recursion
//   log P(n + 2) = log P(n) + log(ratio_num(j) / ratio_den(j)) + 2 log tanh g
// with j the sector index (n = 2j or 2j + 1). For the vacuum sector the ratio
// is (2j+1)/(2j+2), increasing towards tanh^2 g; for the single-photon sector
// it is (2j+3)/(2j+2), decreasing towards tanh^2 g. `max_remaining_ratio`
// bounds every ratio beyond sector index j, which turns the first omitted
// term into a geometric bound on the omitted tail.
struct Sector {
  int offset;            // 0 for even, 1 for odd
  double log_first;      // log P(offset)
  bool odd;

  double log_ratio(std::int64_t j, double lg2) const {
    const double jj = static_cast<double>(j);
    return odd ? std::log1p(1.0 / (2.0 * jj + 2.0)) + lg2
               : std::log1p(-1.0 / (2.0 * jj + 2.0)) + lg2;
  }
  double max_remaining_log_ratio(std::int64_t j, double lg2) const {
    return odd ? log_ratio(j, lg2) : lg2;
  }
};

FockDistribution build_sector(const GainParams& gain, const TruncationPolicy& policy,
                              const Sector& sector, const char* name) {
  const std::int64_t cap = policy.resolved_cap(gain);
  const bool fixed = policy.mode == TruncationPolicy::Mode::fixed_cutoff;
  if (fixed && policy.n_max > cap) {
    throw TruncationError(std::string(name) + ": fixed cutoff exceeds hard cap", 1.0, cap);
  }
  if (fixed && policy.n_max < sector.offset) {
    throw TruncationError(std::string(name) + ": fixed cutoff excludes the whole support", 1.0,
                          cap);
  }

  if (gain.g == 0.0) {
    const std::int64_t size = fixed ? policy.n_max + 1 : sector.offset + 1;
    std::vector<double> lp(static_cast<std::size_t>(size), kNegInf);
    lp[static_cast<std::size_t>(sector.offset)] = 0.0;
    return FockDistribution::from_log_probs(std::move(lp), 0.0);
  }

  const double lg2 = log_gamma_squared(gain.g);
  std::vector<double> lp;
  lp.reserve(fixed ? static_cast<std::size_t>(policy.n_max + 1) : 1024);
  if (sector.offset == 1) lp.push_back(kNegInf);

  double current = sector.log_first;
  double tail_bound = 1.0;
  for (std::int64_t j = 0;; ++j) {
    const std::int64_t n = 2 * j + sector.offset;
    lp.push_back(current);
    const double next = current + sector.log_ratio(j, lg2);
    const double max_ratio = sector.max_remaining_log_ratio(j + 1, lg2);
    // Omitted terms start at n + 2.
    tail_bound = max_ratio < 0.0 ? std::exp(next) / -std::expm1(max_ratio) : 1.0;

    if (fixed) {
      if (n + 2 > policy.n_max) break;
    } else if (tail_bound <= policy.epsilon) {
      break;
    }
    if (n + 2 > cap) {
      throw TruncationError(std::string(name) + ": hard cap " + std::to_string(cap) +
                                " reached with tail mass " + std::to_string(tail_bound),
                            tail_bound, cap);
    }
    lp.push_back(kNegInf);
    current = next;
  }
  if (fixed) {
    lp.resize(static_cast<std::size_t>(policy.n_max + 1), kNegInf);
    if (tail_bound >= 1.0) {
      // No geometric bound yet; fall back to the normalization deficit.
      double sum = 0.0;
      for (double v : lp) sum += std::exp(v);
      tail_bound = std::clamp(1.0 - sum, 0.0, 1.0);
    }
  }
  return FockDistribution::from_log_probs(std::move(lp), std::min(tail_bound, 1.0));
}

}  // namespace

GainParams GainParams::from_gain(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("gain must be finite and >= 0");
  GainParams p;
  p.g = g;
  const double s = std::sinh(g);
  p.nbar = s * s;
  p.gamma = std::tanh(g);
  p.c = 2.0 * p.nbar + 1.0;
  return p;
}

TruncationPolicy TruncationPolicy::tail(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("tail mass must lie in (0, 1)");
  TruncationPolicy p;
  p.mode = Mode::tail_mass;
  p.epsilon = epsilon;
  return p;
}

TruncationPolicy TruncationPolicy::fixed(std::int64_t n_max) {
  if (n_max < 0) throw DomainError("fixed cutoff must be >= 0");
  TruncationPolicy p;
  p.mode = Mode::fixed_cutoff;
  p.n_max = n_max;
  return p;
}

std::int64_t TruncationPolicy::resolved_cap(const GainParams& gain) const {
  if (hard_cap) return *hard_cap;
  const double cap = 50.0 * (3.0 * gain.nbar + 1.0) + 64.0;
  if (cap > 4.0e8) return static_cast<std::int64_t>(4.0e8);
  return static_cast<std::int64_t>(cap);
}

const char* to_string(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    case Parity::mixed: return "mixed";
  }
  return "mixed";
}

FockDistribution FockDistribution::from_probs(std::vector<double> probs, double tail_mass) {
  std::vector<double> lp(probs.size());
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (!(probs[n] >= 0.0)) throw DomainError("probabilities must be >= 0");
    lp[n] = probs[n] > 0.0 ? std::log(probs[n]) : kNegInf;
  }
  FockDistribution d;
  d.probs_ = std::move(probs);
  d.log_probs_ = std::move(lp);
  d.tail_mass_ = tail_mass;
  bool has_even = false, has_odd = false;
  for (std::size_t n = 0; n < d.probs_.size(); ++n) {
    if (d.probs_[n] > 0.0) (n % 2 ? has_odd : has_even) = true;
  }
  d.parity_ = has_even && !has_odd ? Parity::even : (has_odd && !has_even ? Parity::odd : Parity::mixed);
  return d;
}

FockDistribution FockDistribution::from_log_probs(std::vector<double> log_probs, double tail_mass) {
  FockDistribution d;
  d.probs_.resize(log_probs.size());
  bool has_even = false, has_odd = false;
  for (std::size_t n = 0; n < log_probs.size(); ++n) {
    d.probs_[n] = std::exp(log_probs[n]);
    if (d.probs_[n] > 0.0) (n % 2 ? has_odd : has_even) = true;
  }
  d.log_probs_ = std::move(log_probs);
  d.tail_mass_ = tail_mass;
  d.parity_ = has_even && !has_odd ? Parity::even : (has_odd && !has_even ? Parity::odd : Parity::mixed);
  return d;
}

double FockDistribution::total_mass() const {
  double s = 0.0;
  for (double p : probs_) s += p;
  return s;
}

double FockDistribution::mean() const {
  double s = 0.0;
  for (std::size_t n = 0; n < probs_.size(); ++n) s += static_cast<double>(n) * probs_[n];
  return s;
}

double FockDistribution::variance() const {
  const double m = mean();
  double s = 0.0;
  for (std::size_t n = 0; n < probs_.size(); ++n) {
    const double d = static_cast<double>(n) - m;
    s += d * d * probs_[n];
  }
  return s;
}

FockDistribution squeezed_vacuum_distribution(const GainParams& gain,
                                              const TruncationPolicy& policy) {
  return build_sector(gain, policy, Sector{0, -log_cosh(gain.g), false},
                      "squeezed_vacuum_distribution");
}

FockDistribution squeezed_single_photon_distribution(const GainParams& gain,
                                                     const TruncationPolicy& policy) {
  return build_sector(gain, policy, Sector{1, -3.0 * log_cosh(gain.g), true},
                      "squeezed_single_photon_distribution");
}

double squeezed_vacuum_mean(const GainParams& gain) { return gain.nbar; }
double squeezed_vacuum_variance(const GainParams& gain) {
  return 2.0 * gain.nbar * (gain.nbar + 1.0);
}
double squeezed_single_photon_mean(const GainParams& gain) { return 3.0 * gain.nbar + 1.0; }
double squeezed_single_photon_variance(const GainParams& gain) {
  return 6.0 * gain.nbar * (gain.nbar + 1.0);
}

double JointModeDistribution::probability(std::int64_t n_plus, std::int64_t n_minus) const {
  return weight_plus * odd->prob(n_plus) * even->prob(n_minus) +
         weight_minus() * even->prob(n_plus) * odd->prob(n_minus);
}

double reduce_phase(double phi) {
  if (!std::isfinite(phi)) throw DomainError("phase must be finite");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(phi, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

JointModeDistribution amplified_probe_joint(double phi, SharedFock odd, SharedFock even) {
  if (!odd || !even) throw DomainError("amplified_probe_joint: missing sector distribution");
  JointModeDistribution j;
  j.phi = reduce_phase(phi);
  j.weight_plus = 0.5 * (1.0 + std::cos(j.phi));
  j.odd = std::move(odd);
  j.even = std::move(even);
  return j;
}

JointModeDistribution amplified_probe_joint(double phi, const GainParams& gain,
                                            const TruncationPolicy& policy) {
  auto odd = std::make_shared<const FockDistribution>(
      squeezed_single_photon_distribution(gain, policy));
  auto even = std::make_shared<const FockDistribution>(squeezed_vacuum_distribution(gain, policy));
  return amplified_probe_joint(phi, std::move(odd), std::move(even));
}

std::pair<double, double> mode_means(const JointModeDistribution& joint) {
  const double m_odd = joint.odd->mean();
  const double m_even = joint.even->mean();
  return {joint.weight_plus * m_odd + joint.weight_minus() * m_even,
          joint.weight_plus * m_even + joint.weight_minus() * m_odd};
}

double fringe_visibility(const GainParams& gain) {
  return gain.c / (4.0 * gain.nbar + 1.0);
}

void write_fock_csv(std::ostream& out, const FockDistribution& dist) {
  csv::Table t;
  t.metadata.emplace_back("parity", to_string(dist.parity()));
  t.metadata.emplace_back("tail_mass", csv::format_double(dist.tail_mass()));
  t.header = {"n", "prob"};
  for (std::int64_t n = 0; n < dist.size(); ++n) {
    t.rows.push_back({csv::format_int(n), csv::format_double(dist.prob(n))});
  }
  csv::write(out, t);
}

FockDistribution read_fock_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto cn = t.column("n");
  const auto cp = t.column("prob");
  std::vector<double> probs(t.rows.size(), 0.0);
  for (const auto& row : t.rows) {
    const auto n = csv::parse_int(row[cn]);
    if (n < 0 || n >= static_cast<std::int64_t>(probs.size())) {
      throw ParseError("fock csv: photon number out of range");
    }
    probs[static_cast<std::size_t>(n)] = csv::parse_double(row[cp]);
  }
  double tail = 0.0;
  if (const auto* v = t.meta("tail_mass")) {
    tail = csv::parse_double(*v);
  } else {
    double s = 0.0;
    for (double p : probs) s += p;
    tail = std::max(0.0, 1.0 - s);
  }
  return FockDistribution::from_probs(std::move(probs), tail);
}

}  // namespace qiopa
