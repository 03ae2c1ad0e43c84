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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qiopa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter is outside the domain of the formula or model.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested computation is outside the regime where the chosen path is
/// valid (size guards, oracle range, exact-Fisher budget).
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// The hard cap was reached before the tail-mass target.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double achieved_tail_mass, std::int64_t cap)
      : Error(what), achieved_tail_mass_(achieved_tail_mass), cap_(cap) {}

  double achieved_tail_mass() const noexcept { return achieved_tail_mass_; }
  std::int64_t cap() const noexcept { return cap_; }

 private:
  double achieved_tail_mass_;
  std::int64_t cap_;
};

/// The truncated squeeze-operator basis is too small for the requested gain.
class OracleResolutionError : public RegimeError {
 public:
  OracleResolutionError(const std::string& what, double edge_mass)
      : RegimeError(what), edge_mass_(edge_mass) {}
  double edge_mass() const noexcept { return edge_mass_; }

 private:
  double edge_mass_;
};

/// Least-squares fit could not be carried out or did not converge.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Threshold statistics with no conclusive events anywhere on the grid.
class DegenerateStatisticsError : public Error {
 public:
  using Error::Error;
};

/// Monte Carlo run failures (unresolvable scenario, worker exception).
class RunError : public Error {
 public:
  RunError(const std::string& what, int worker) : Error(what), worker_(worker) {}
  int worker() const noexcept { return worker_; }

 private:
  int worker_;
};

/// Malformed input files or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qiopa
