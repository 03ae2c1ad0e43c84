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

// Brute-force reference for the closed-form photon statistics.
//
// Builds the single-mode squeeze operator exp((g/2)(a^2 - a^dag^2)) on a
// truncated number basis by scaling-and-squaring a Taylor series of the
// generator, then applies it to basis states. Nothing here uses the
// closed-form distributions, the parity-sector mixture, or log-gamma.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qiopa/fock.hpp"

namespace qiopa {

inline constexpr int kOracleDefaultDim = 128;
inline constexpr int kOracleMaxDim = 160;
inline constexpr double kOracleMaxGain = 1.0;
inline constexpr double kOracleEdgeMassLimit = 1e-8;

/// Dense row-major real matrix, only what the oracle needs.
struct DenseMatrix {
  int n = 0;
  std::vector<double> a;

  explicit DenseMatrix(int dim = 0) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// exp((g/2)(a^2 - a^dag^2)) truncated to `dim` levels.
DenseMatrix squeeze_operator(double g, int dim);

/// Joint photon-number law on a dim x dim grid (row = pi+, column = pi-).
struct OracleJointLaw {
  int dim = 0;
  std::vector<double> probs;

  double operator()(int n_plus, int n_minus) const {
    return probs[static_cast<std::size_t>(n_plus) * dim + n_minus];
  }
};

/// |<n|S|input>|^2 for a single mode. Throws RegimeError when g > 1 or the
/// dimension is out of range, OracleResolutionError when more than 1e-8 of
/// the mass sits in the top eighth of the basis.
FockDistribution small_g_oracle_mode(int input_photons, double g, int dim = kOracleDefaultDim);

/// Product input |a, b> on the pi+/pi- modes, both squeezed.
OracleJointLaw small_g_oracle(std::array<int, 2> input_photons, double g,
                              int dim = kOracleDefaultDim);

/// Probe input cos(phi/2)|1,0> + i sin(phi/2)|0,1>, evolved as a complex
/// two-mode state vector before taking |amplitude|^2.
OracleJointLaw small_g_oracle_probe(double phi, double g, int dim = kOracleDefaultDim);

}  // namespace qiopa
