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

// Deterministic batch-parallel Monte Carlo.
//
// Trial t always draws from CounterRng(master_seed, stream_offset + t), and
// trials are grouped into fixed-size batches whose results are stored by batch
// index. Workers only decide who computes a batch, so the output does not
// depend on the worker count or on scheduling. Accumulators use exact
// (correctly rounded) summation, which makes merging associative and
// commutative bit for bit.

#pragma once

#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qiopa/error.hpp"
#include "qiopa/rng.hpp"

namespace qiopa {

/// Exact floating-point sum (Shewchuk partials) with correctly rounded result.
class ExactSum {
 public:
  void add(double x);
  void add(const ExactSum& other);
  /// Adds a * b exactly (two-product).
  void add_product(double a, double b);
  /// Adds factor * other exactly.
  void add_scaled(const ExactSum& other, double factor);
  double value() const;
  bool empty() const { return partials_.empty(); }

 private:
  std::vector<double> partials_;
};

/// Streaming mean/variance of one scalar observable.
class Accumulator {
 public:
  void add(double x);
  void merge(const Accumulator& other);

  std::uint64_t count() const { return n_; }
  double mean() const;
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  /// sample_std / sqrt(n).
  double std_err() const;

 private:
  std::uint64_t n_ = 0;
  ExactSum sum_;
  ExactSum sum_sq_;
};

struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n_samples = 0;
};

/// Named estimates with a commutative merge.
class EstimateSet {
 public:
  Accumulator& operator[](const std::string& name) { return acc_[name]; }
  void merge(const EstimateSet& other);

  bool contains(const std::string& name) const { return acc_.count(name) != 0; }
  Estimate get(const std::string& name) const;  ///< throws Error if absent
  const Accumulator& accumulator(const std::string& name) const;
  std::vector<std::string> names() const;

  bool operator==(const EstimateSet& other) const;

 private:
  std::map<std::string, Accumulator> acc_;
};

struct RunPlan {
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  std::uint64_t trials_total = 0;
  std::uint64_t batch_size = 4096;
  std::uint64_t stream_offset = 0;  ///< first stream index used by trial 0

  std::uint64_t batch_count() const;
  /// Trials handled by `worker` under round-robin batch assignment.
  std::uint64_t allocation(unsigned worker) const;
  void validate() const;
};

/// A per-trial experiment writing one value per declared estimate name.
class Scenario {
 public:
  virtual ~Scenario() = default;
  virtual std::vector<std::string> estimate_names() const = 0;
  virtual void run_trial(std::uint64_t trial, CounterRng& rng, std::span<double> out) const = 0;
};

EstimateSet run_plan_execute(const RunPlan& plan, const Scenario* scenario);

/// Runs `fn(state, trial, rng)` for every trial and returns one state per
/// batch, in batch order. `State` must be copyable from `init`.
template <class State, class TrialFn>
std::vector<State> run_batched(const RunPlan& plan, const State& init, const TrialFn& fn) {
  plan.validate();
  const std::uint64_t batches = plan.batch_count();
  std::vector<State> results(static_cast<std::size_t>(batches), init);

  auto work = [&](unsigned worker) {
    for (std::uint64_t b = worker; b < batches; b += plan.workers) {
      State& state = results[static_cast<std::size_t>(b)];
      const std::uint64_t begin = b * plan.batch_size;
      const std::uint64_t end = std::min(plan.trials_total, begin + plan.batch_size);
      for (std::uint64_t t = begin; t < end; ++t) {
        CounterRng rng(plan.master_seed, plan.stream_offset + t);
        fn(state, t, rng);
      }
    }
  };

  if (plan.workers == 1) {
    try {
      work(0);
    } catch (const std::exception& e) {
      throw RunError("worker 0 failed: " + std::string(e.what()), 0);
    }
    return results;
  }

  std::mutex error_mutex;
  int failed_worker = -1;
  std::string failure;
  {
    std::vector<std::jthread> threads;
    threads.reserve(plan.workers);
    for (unsigned w = 0; w < plan.workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (failed_worker < 0 || static_cast<int>(w) < failed_worker) {
            failed_worker = static_cast<int>(w);
            failure = e.what();
          }
        }
      });
    }
  }
  if (failed_worker >= 0) {
    throw RunError("worker " + std::to_string(failed_worker) + " failed: " + failure,
                   failed_worker);
  }
  return results;
}

/// Above this n*eta*(1-eta) binomial_sample switches to a rounded normal draw.
inline constexpr double kBinomialNormalSwitchover = 1000.0;

/// Number of survivors when each of n photons is kept with probability eta.
/// Exact below the switchover, normal approximation (clamped to [0, n])
/// above it.
std::int64_t binomial_sample(std::int64_t n, double eta, CounterRng& rng);

/// Worker count from the QIOPA_WORKERS environment variable, else 1.
unsigned default_worker_count();

}  // namespace qiopa
