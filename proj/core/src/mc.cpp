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

#include "qiopa/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace qiopa {

void ExactSum::add(double x) {
  if (!std::isfinite(x)) throw DomainError("ExactSum: non-finite observation");
  std::size_t kept = 0;
  for (double y : partials_) {
    if (std::abs(x) < std::abs(y)) std::swap(x, y);
    const double hi = x + y;
    const double lo = y - (hi - x);
    if (lo != 0.0) partials_[kept++] = lo;
    x = hi;
  }
  partials_.resize(kept);
  partials_.push_back(x);
}

void ExactSum::add(const ExactSum& other) {
  const auto parts = other.partials_;
  for (double p : parts) add(p);
}

void ExactSum::add_product(double a, double b) {
  const double p = a * b;
  add(p);
  add(std::fma(a, b, -p));
}

void ExactSum::add_scaled(const ExactSum& other, double factor) {
  const auto parts = other.partials_;
  for (double p : parts) add_product(p, factor);
}

double ExactSum::value() const {
  // Correct rounding of the non-overlapping expansion, as in CPython's fsum.
  std::size_t n = partials_.size();
  if (n == 0) return 0.0;
  double hi = partials_[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials_[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    const double yr = x - hi;
    if (y == yr) hi = x;
  }
  return hi;
}

void Accumulator::add(double x) {
  ++n_;
  sum_.add(x);
  const double sq = x * x;
  sum_sq_.add(sq);
  sum_sq_.add(std::fma(x, x, -sq));
}

void Accumulator::merge(const Accumulator& other) {
  n_ += other.n_;
  sum_.add(other.sum_);
  sum_sq_.add(other.sum_sq_);
}

double Accumulator::mean() const {
  return n_ == 0 ? 0.0 : sum_.value() / static_cast<double>(n_);
}

double Accumulator::variance() const {
  if (n_ < 2) return 0.0;
  // sum (x - m)^2 = S2 - 2 m S1 + n m^2, evaluated exactly for the rounded
  // mean m; the rounding of m only enters at second order.
  const double m = mean();
  const double nn = static_cast<double>(n_);
  ExactSum ss = sum_sq_;
  ss.add_scaled(sum_, -2.0 * m);
  const double msq = m * m;
  ss.add_product(nn, msq);
  ss.add_product(nn, std::fma(m, m, -msq));
  return std::max(0.0, ss.value()) / (nn - 1.0);
}

double Accumulator::std_err() const {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

void EstimateSet::merge(const EstimateSet& other) {
  for (const auto& [name, acc] : other.acc_) acc_[name].merge(acc);
}

Estimate EstimateSet::get(const std::string& name) const {
  const auto& a = accumulator(name);
  return Estimate{a.mean(), a.std_err(), a.count()};
}

const Accumulator& EstimateSet::accumulator(const std::string& name) const {
  auto it = acc_.find(name);
  if (it == acc_.end()) throw Error("no estimate named '" + name + "'");
  return it->second;
}

std::vector<std::string> EstimateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, acc] : acc_) out.push_back(name);
  return out;
}

bool EstimateSet::operator==(const EstimateSet& other) const {
  if (names() != other.names()) return false;
  for (const auto& [name, acc] : acc_) {
    const auto a = get(name);
    const auto b = other.get(name);
    if (a.value != b.value || a.std_err != b.std_err || a.n_samples != b.n_samples) return false;
  }
  return true;
}

std::uint64_t RunPlan::batch_count() const {
  return batch_size == 0 ? 0 : (trials_total + batch_size - 1) / batch_size;
}

std::uint64_t RunPlan::allocation(unsigned worker) const {
  std::uint64_t total = 0;
  const std::uint64_t batches = batch_count();
  for (std::uint64_t b = worker; b < batches; b += workers) {
    const std::uint64_t begin = b * batch_size;
    total += std::min(trials_total, begin + batch_size) - begin;
  }
  return total;
}

void RunPlan::validate() const {
  if (workers == 0) throw DomainError("RunPlan: workers must be >= 1");
  if (batch_size == 0) throw DomainError("RunPlan: batch_size must be >= 1");
}

EstimateSet run_plan_execute(const RunPlan& plan, const Scenario* scenario) {
  if (scenario == nullptr) throw RunError("run_plan_execute: no scenario to run", -1);
  const auto names = scenario->estimate_names();
  if (names.empty()) throw RunError("run_plan_execute: scenario declares no estimates", -1);

  struct BatchState {
    std::vector<Accumulator> acc;
    std::vector<double> scratch;
  };
  BatchState init{std::vector<Accumulator>(names.size()), std::vector<double>(names.size())};
  auto batches = run_batched(plan, init, [&](BatchState& s, std::uint64_t t, CounterRng& rng) {
    std::fill(s.scratch.begin(), s.scratch.end(), 0.0);
    scenario->run_trial(t, rng, s.scratch);
    for (std::size_t i = 0; i < names.size(); ++i) s.acc[i].add(s.scratch[i]);
  });

  EstimateSet out;
  for (const auto& name : names) out[name];
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]].merge(b.acc[i]);
  }
  return out;
}

std::int64_t binomial_sample(std::int64_t n, double eta, CounterRng& rng) {
  if (n < 0) throw DomainError("binomial_sample: n must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("binomial_sample: eta outside [0, 1]");
  if (n == 0 || eta == 0.0) return 0;
  if (eta == 1.0) return n;
  const double nd = static_cast<double>(n);
  const double var = nd * eta * (1.0 - eta);
  if (var <= kBinomialNormalSwitchover) {
    boost::random::binomial_distribution<std::int64_t, double> dist(n, eta);
    return dist(rng);
  }
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double x = nd * eta + std::sqrt(var) * normal(rng);
  return std::clamp<std::int64_t>(std::llround(x), 0, n);
}

unsigned default_worker_count() {
  if (const char* env = std::getenv("QIOPA_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

}  // namespace qiopa
