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

// Measurement schemes on the detected counts (m+, m-).
//
// Counting: the photon-number difference D = m+ - m- is averaged per phase
// and fitted with A cos(phi) + B; visibility is |A| over the mean total
// detected intensity <m+ + m->.
//
// Orthogonality filter (OF): each shot is +1 if m+ - m- > k, -1 if
// m- - m+ > k, and inconclusive (0) otherwise. The fringe I(phi) is the
// unconditional +1 rate (+1 outcomes per trial). R_mean is the conclusive
// fraction averaged over the phase grid. The amplitude A comes from a cosine
// fit to the mean outcome r+ - r-, so both ports contribute, and the +1
// fringe is taken as (R_mean + A cos phi) / 2: I_max + I_min = R_mean and
// V = |A| / R_mean. The conditional rate P(+1 | conclusive) is reported
// alongside for comparison.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "qiopa/channel.hpp"
#include "qiopa/csv.hpp"
#include "qiopa/fock.hpp"

namespace qiopa {

struct OFConfig {
  std::int64_t k = 0;  ///< threshold in detected photons, >= 0
};

/// +1, 0 or -1 for one shot.
int of_classify(std::int64_t m_plus, std::int64_t m_minus, OFConfig cfg);

enum class ScanKind { counting, threshold, rate };

struct ScanStrategy {
  ScanKind kind = ScanKind::counting;
  std::int64_t k = 0;

  static ScanStrategy counting() { return {ScanKind::counting, 0}; }
  static ScanStrategy of(std::int64_t k) { return {ScanKind::threshold, k}; }
};

/// Per-phase Monte Carlo estimates. `signal` is <D> for counting scans and
/// the +1 rate for threshold scans; `rate` scans hold externally supplied
/// rate data (no MC columns).
struct FringeScan {
  ScanStrategy strategy;
  std::vector<double> phi_grid;
  std::vector<double> signal;
  std::vector<double> std_err;
  std::vector<std::uint64_t> n_trials;
  // counting only: mean of m+ + m- and its standard error
  std::vector<double> intensity;
  std::vector<double> intensity_err;
  // threshold only
  std::vector<double> rate_plus;
  std::vector<double> rate_zero;
  std::vector<double> rate_minus;

  std::size_t size() const { return phi_grid.size(); }
  void validate() const;
};

/// Channel and amplifier for one simulated experiment.
struct ExperimentParams {
  SectorPair sectors;
  ChannelParams channel;
};

/// Seeds and parallelism for the sampling operations.
struct McOptions {
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  std::uint64_t batch_size = 4096;
  std::uint64_t stream_offset = 0;
  /// Reuse the same trial streams at every phase point (paired samples).
  bool common_random_numbers = false;
};

/// Analytic (mean, variance) of D at phi, by moment propagation.
std::pair<double, double> counting_difference_stats(double phi, const GainParams& gain,
                                                    const ChannelParams& channel);

FringeScan scan_fringe(const std::vector<double>& phi_grid, const ExperimentParams& params,
                       std::uint64_t trials_per_point, ScanStrategy strategy, const McOptions& mc);

struct VisibilityFit {
  double visibility = 0.0;
  double sigma = 0.0;
  double amplitude = 0.0;  ///< A in A cos(phi) + B
  double offset = 0.0;     ///< B
  double sigma_amplitude = 0.0;
  double sigma_offset = 0.0;
  double cov_amplitude_offset = 0.0;
  double mean_intensity = 0.0;  ///< counting scans only
};

/// Weighted least squares fit of signal = A cos(phi) + B (weights 1/std_err^2).
/// Counting scans: V = |A| / mean intensity. Rate and threshold scans:
/// V = |A| / max(|B|, |A|), i.e. (I_max - I_min) / (I_max + I_min) with
/// I_min clamped at zero. Throws FitError for singular normal equations.
VisibilityFit estimate_visibility(const FringeScan& scan);

struct OFStatistics {
  std::int64_t k = 0;
  double r_mean = 0.0;
  double i_max = 0.0;
  double i_min = 0.0;
  double visibility = 0.0;
  double sigma_visibility = 0.0;
  double conditional_visibility = 0.0;  ///< from P(+1 | conclusive)
  FringeScan scan;                       ///< per-phase rates
};

/// One row of a threshold sweep; statistics absent when no shot on the grid
/// was conclusive.
struct OFSweepEntry {
  std::int64_t k = 0;
  std::optional<OFStatistics> stats;
  double r_mean = 0.0;
};

/// Throws DegenerateStatisticsError for an all-inconclusive grid.
OFStatistics of_statistics(const std::vector<double>& phi_grid, OFConfig cfg,
                           const ExperimentParams& params, std::uint64_t trials_per_point,
                           const McOptions& mc);

/// All thresholds are evaluated on the same samples.
std::vector<OFSweepEntry> of_sweep(const std::vector<double>& phi_grid,
                                   const std::vector<std::int64_t>& k_grid,
                                   const ExperimentParams& params,
                                   std::uint64_t trials_per_point, const McOptions& mc);

/// Exact OF statistics from the thinned joint law (small instances only).
OFStatistics of_statistics_exact(const std::vector<double>& phi_grid, OFConfig cfg,
                                 const ExperimentParams& params);

/// CSV columns: phi, signal, std_err, n_trials, then intensity,
/// intensity_err (counting) or rate_plus, rate_zero, rate_minus (threshold).
/// Strategy and threshold travel as "strategy" and "k" metadata.
csv::Table scan_to_table(const FringeScan& scan);
FringeScan scan_from_table(const csv::Table& table);
void write_scan_csv(std::ostream& out, const FringeScan& scan);
FringeScan read_scan_csv(std::istream& in);

}  // namespace qiopa
