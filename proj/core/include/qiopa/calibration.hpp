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

// Gain calibration from counts versus pump power in the spontaneous regime.
//
// Counts are modelled as the per-pulse click probability of the thinned
// squeezed vacuum, and the gain is taken proportional to the pump field
// amplitude, g = g_max sqrt(P / P_max).

#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qiopa {

/// eta tanh^2 g / (1 - (1 - eta) tanh^2 g).
double model_counts(double g, double eta);

/// g_max sqrt(P / P_max).
double gain_power_map(double power, double p_max, double g_max);

enum class PowerMode { raw, normalized };
enum class WeightMode { poisson, unweighted, explicit_weights };

const char* to_string(PowerMode m);
PowerMode power_mode_from_string(const std::string& s);

struct CalibrationPoint {
  double power = 0.0;
  double counts = 0.0;
  double weight = 1.0;  ///< used only with explicit weights
};

struct CalibrationDataset {
  std::vector<CalibrationPoint> points;
  PowerMode power_mode = PowerMode::raw;
  WeightMode weight_mode = WeightMode::poisson;

  /// Points sorted by power; throws DomainError for fewer than four points,
  /// negative or repeated powers, or non-finite values.
  std::vector<CalibrationPoint> sorted() const;
  void validate() const;
  /// Largest power for raw data, 1 for normalized data.
  double p_max() const;
};

struct CalibrationFit {
  double g_max = 0.0;
  double eta_fit = 0.0;
  double residual_norm = 0.0;  ///< sqrt of the weighted residual sum of squares
  double g_max_halfwidth = 0.0;
  double eta_halfwidth = 0.0;
  int starts_converged = 0;
  int evaluations = 0;
};

struct FitOptions {
  int max_iterations = 4000;  ///< per simplex start
  double tolerance = 1e-15;   ///< simplex spread in objective value
};

/// Weighted least squares over (g_max, eta). Throws FitError for degenerate
/// data, or when no start converges; the message carries the best point.
CalibrationFit fit_gain(const CalibrationDataset& data, const FitOptions& options = {});

/// CSV with columns power, counts and optionally weight. A weight column
/// switches the dataset to explicit weights.
CalibrationDataset read_calibration_csv(std::istream& in, PowerMode mode = PowerMode::raw);
void write_calibration_csv(std::ostream& out, const CalibrationDataset& data);

/// Structured text report with every field of the fit.
std::string format_fit_report(const CalibrationFit& fit);

}  // namespace qiopa
