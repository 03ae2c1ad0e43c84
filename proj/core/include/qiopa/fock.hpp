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

// Photon-number statistics of the phase-covariant amplifier output.
//
// The amplifier acts on the pi+/pi- polarization modes as two independent
// single-mode squeezers of gain g. A probe photon in |phi> enters as
// cos(phi/2)|1,0> + i sin(phi/2)|0,1>, so the output is
//
//   cos(phi/2) |Phi+> + i sin(phi/2) |Phi->,
//   |Phi+> = S|1> (x) S|0>,  |Phi-> = S|0> (x) S|1>.
//
// S|0> only populates even photon numbers and S|1> only odd ones, hence the
// two branches have disjoint supports in every mode. Cross terms between the
// branches never contribute to a diagonal element |n+,n-><n+,n-|, and the
// photon-number law is exactly the classical mixture
//
//   P(n+, n-) = cos^2(phi/2) P_odd(n+) P_even(n-)
//             + sin^2(phi/2) P_even(n+) P_odd(n-).
//
// Relative phases inside the branch wavefunctions do not enter photon counts
// and are not represented.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace qiopa {

/// Amplifier gain and the quantities derived from it.
struct GainParams {
  double g = 0.0;      ///< nonlinear gain
  double nbar = 0.0;   ///< mean spontaneous pairs, sinh^2 g
  double gamma = 0.0;  ///< tanh g
  double c = 1.0;      ///< fringe amplitude factor 2 nbar + 1

  /// Throws DomainError for negative or non-finite g.
  static GainParams from_gain(double g);
};

/// How far photon-number distributions are tabulated.
struct TruncationPolicy {
  enum class Mode { fixed_cutoff, tail_mass };

  Mode mode = Mode::tail_mass;
  std::int64_t n_max = 0;        ///< fixed_cutoff only
  double epsilon = 1e-8;         ///< tail_mass only
  std::optional<std::int64_t> hard_cap;  ///< default: 50 (3 nbar + 1) + 64

  static TruncationPolicy tail(double epsilon = 1e-8);
  static TruncationPolicy fixed(std::int64_t n_max);

  std::int64_t resolved_cap(const GainParams& gain) const;
};

enum class Parity { even, odd, mixed };

const char* to_string(Parity p);

/// Truncated probability vector over photon number, n = 0..n_max().
///
/// Entries outside the declared parity are exact zeros. tail_mass() is an
/// upper bound on the probability beyond n_max().
class FockDistribution {
 public:
  /// From linear-domain probabilities. Parity is detected from the support.
  static FockDistribution from_probs(std::vector<double> probs, double tail_mass);
  /// From log-domain weights; -inf marks exact zeros.
  static FockDistribution from_log_probs(std::vector<double> log_probs, double tail_mass);

  std::span<const double> probs() const { return probs_; }
  std::span<const double> log_probs() const { return log_probs_; }
  double prob(std::int64_t n) const {
    return (n >= 0 && n < size()) ? probs_[static_cast<std::size_t>(n)] : 0.0;
  }
  std::int64_t size() const { return static_cast<std::int64_t>(probs_.size()); }
  std::int64_t n_max() const { return size() - 1; }
  Parity parity() const { return parity_; }
  double tail_mass() const { return tail_mass_; }

  double total_mass() const;
  double mean() const;
  double variance() const;

 private:
  FockDistribution() = default;

  std::vector<double> probs_;
  std::vector<double> log_probs_;
  Parity parity_ = Parity::mixed;
  double tail_mass_ = 0.0;
};

/// Squeezed vacuum: P(2j) = (2j)! / (4^j (j!)^2) tanh^{2j} g / cosh g.
FockDistribution squeezed_vacuum_distribution(const GainParams& gain,
                                              const TruncationPolicy& policy = {});

/// Squeezed single photon:
/// P(2i+1) = (2i+1)! / (4^i (i!)^2) tanh^{2i} g / cosh^3 g.
FockDistribution squeezed_single_photon_distribution(const GainParams& gain,
                                                     const TruncationPolicy& policy = {});

/// Closed-form moments of the two sectors (untruncated).
double squeezed_vacuum_mean(const GainParams& gain);
double squeezed_vacuum_variance(const GainParams& gain);
double squeezed_single_photon_mean(const GainParams& gain);
double squeezed_single_photon_variance(const GainParams& gain);

using SharedFock = std::shared_ptr<const FockDistribution>;

/// Two-mode photon-number law of the amplified probe at phase phi.
struct JointModeDistribution {
  double phi = 0.0;          ///< reduced to [0, 2 pi)
  double weight_plus = 1.0;  ///< cos^2(phi/2), weight of the Phi+ branch
  SharedFock odd;            ///< squeezed single photon
  SharedFock even;           ///< squeezed vacuum

  double weight_minus() const { return 1.0 - weight_plus; }

  // Phi+ branch: odd on pi+, even on pi-. Phi- branch: the swap.
  const FockDistribution& plus_branch_plus_mode() const { return *odd; }
  const FockDistribution& plus_branch_minus_mode() const { return *even; }
  const FockDistribution& minus_branch_plus_mode() const { return *even; }
  const FockDistribution& minus_branch_minus_mode() const { return *odd; }

  double probability(std::int64_t n_plus, std::int64_t n_minus) const;
  double tail_mass() const { return odd->tail_mass() + even->tail_mass(); }
};

/// Reduce an arbitrary real phase to [0, 2 pi).
double reduce_phase(double phi);

JointModeDistribution amplified_probe_joint(double phi, const GainParams& gain,
                                            const TruncationPolicy& policy = {});

/// Same law from distributions that were already built for this gain.
JointModeDistribution amplified_probe_joint(double phi, SharedFock odd, SharedFock even);

/// (<n+>, <n->) computed from the stored distributions.
std::pair<double, double> mode_means(const JointModeDistribution& joint);

/// (2 nbar + 1) / (4 nbar + 1), the phi = 0 fringe visibility.
double fringe_visibility(const GainParams& gain);

/// CSV layout: header "n,prob", one row per photon number.
void write_fock_csv(std::ostream& out, const FockDistribution& dist);
FockDistribution read_fock_csv(std::istream& in);

}  // namespace qiopa
