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

#include "qiopa/oracle.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "qiopa/error.hpp"

namespace qiopa {

namespace {

DenseMatrix multiply(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix r(x.n);
  for (int i = 0; i < x.n; ++i) {
    for (int k = 0; k < x.n; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (int j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
    }
  }
  return r;
}

double max_abs_row_sum(const DenseMatrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.n; ++j) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

void check_regime(double g, int dim) {
  if (!(g >= 0.0) || g > kOracleMaxGain) {
    throw RegimeError("small_g_oracle: gain " + std::to_string(g) + " outside [0, 1]");
  }
  if (dim < 8 || dim > kOracleMaxDim) {
    throw RegimeError("small_g_oracle: dimension " + std::to_string(dim) + " outside [8, " +
                      std::to_string(kOracleMaxDim) + "]");
  }
}

std::vector<double> column(const DenseMatrix& u, int input) {
  std::vector<double> v(static_cast<std::size_t>(u.n));
  for (int i = 0; i < u.n; ++i) v[static_cast<std::size_t>(i)] = u(i, input);
  return v;
}

void check_edge(const std::vector<double>& amp, double g) {
  const std::size_t dim = amp.size();
  double edge = 0.0;
  for (std::size_t i = dim - dim / 8; i < dim; ++i) edge += amp[i] * amp[i];
  if (edge > kOracleEdgeMassLimit) {
    throw OracleResolutionError("small_g_oracle: dimension " + std::to_string(dim) +
                                    " too small for g=" + std::to_string(g) +
                                    " (edge mass " + std::to_string(edge) + ")",
                                edge);
  }
}

}  // namespace

DenseMatrix squeeze_operator(double g, int dim) {
  // Generator G = (g/2)(a^2 - a^dag^2): <n-2|a^2|n> = sqrt(n(n-1)).
  DenseMatrix gen(dim);
  for (int n = 2; n < dim; ++n) {
    const double v = 0.5 * g * std::sqrt(static_cast<double>(n) * (n - 1));
    gen(n - 2, n) = v;
    gen(n, n - 2) = -v;
  }
  int squarings = 0;
  double norm = max_abs_row_sum(gen);
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& x : gen.a) x *= scale;

  DenseMatrix result(dim);
  for (int i = 0; i < dim; ++i) result(i, i) = 1.0;
  DenseMatrix term = result;
  for (int k = 1; k <= 30; ++k) {
    term = multiply(term, gen);
    const double inv = 1.0 / k;
    double largest = 0.0;
    for (std::size_t i = 0; i < term.a.size(); ++i) {
      term.a[i] *= inv;
      result.a[i] += term.a[i];
      largest = std::max(largest, std::abs(term.a[i]));
    }
    if (largest < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

FockDistribution small_g_oracle_mode(int input_photons, double g, int dim) {
  check_regime(g, dim);
  if (input_photons < 0 || input_photons > 1) {
    throw DomainError("small_g_oracle: input photons must be 0 or 1");
  }
  const auto u = squeeze_operator(g, dim);
  const auto amp = column(u, input_photons);
  check_edge(amp, g);
  std::vector<double> probs(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) probs[i] = amp[i] * amp[i];
  return FockDistribution::from_probs(std::move(probs), 0.0);
}

namespace {

OracleJointLaw evolve_two_mode(const std::vector<std::complex<double>>& psi_in, double g, int dim) {
  const auto u = squeeze_operator(g, dim);
  const std::size_t d = static_cast<std::size_t>(dim);
  // (U (x) U) psi, applied one mode at a time.
  std::vector<std::complex<double>> tmp(d * d), out(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double uik = u(static_cast<int>(i), static_cast<int>(k));
      if (uik == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) tmp[i * d + j] += uik * psi_in[k * d + j];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        acc += u(static_cast<int>(j), static_cast<int>(k)) * tmp[i * d + k];
      }
      out[i * d + j] = acc;
    }
  }
  OracleJointLaw law;
  law.dim = dim;
  law.probs.resize(d * d);
  std::vector<double> edge_plus(d, 0.0), edge_minus(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double p = std::norm(out[i * d + j]);
      law.probs[i * d + j] = p;
      edge_plus[i] += p;
      edge_minus[j] += p;
    }
  }
  double edge = 0.0;
  for (std::size_t i = d - d / 8; i < d; ++i) edge += edge_plus[i] + edge_minus[i];
  if (edge > kOracleEdgeMassLimit) {
    throw OracleResolutionError("small_g_oracle: dimension " + std::to_string(dim) +
                                    " too small for g=" + std::to_string(g),
                                edge);
  }
  return law;
}

}  // namespace

OracleJointLaw small_g_oracle(std::array<int, 2> input_photons, double g, int dim) {
  check_regime(g, dim);
  for (int n : input_photons) {
    if (n < 0 || n > 1) throw DomainError("small_g_oracle: input photons must be 0 or 1");
  }
  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<std::complex<double>> psi(d * d);
  psi[static_cast<std::size_t>(input_photons[0]) * d + static_cast<std::size_t>(input_photons[1])] =
      1.0;
  return evolve_two_mode(psi, g, dim);
}

OracleJointLaw small_g_oracle_probe(double phi, double g, int dim) {
  check_regime(g, dim);
  const std::size_t d = static_cast<std::size_t>(dim);
  std::vector<std::complex<double>> psi(d * d);
  psi[1 * d + 0] = std::cos(0.5 * phi);
  psi[0 * d + 1] = std::complex<double>(0.0, std::sin(0.5 * phi));
  return evolve_two_mode(psi, g, dim);
}

}  // namespace qiopa
