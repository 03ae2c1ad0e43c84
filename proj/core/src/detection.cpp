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

#include "qiopa/detection.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "qiopa/csv.hpp"
#include "qiopa/error.hpp"
#include "qiopa/mc.hpp"

namespace qiopa {

namespace {

const char* kind_name(ScanKind k) {
  switch (k) {
    case ScanKind::counting: return "counting";
    case ScanKind::threshold: return "threshold";
    case ScanKind::rate: return "rate";
  }
  return "rate";
}

ScanKind kind_from(const std::string& s) {
  if (s == "counting") return ScanKind::counting;
  if (s == "threshold") return ScanKind::threshold;
  if (s == "rate") return ScanKind::rate;
  throw ParseError("unknown scan strategy '" + s + "'");
}

// Floor for standard errors of estimates that came out with zero spread.
double floored(double se, std::uint64_t n) {
  return std::max(se, 1.0 / static_cast<double>(std::max<std::uint64_t>(n, 1)));
}

McOptions point_options(const McOptions& mc, std::size_t point, std::uint64_t trials) {
  McOptions o = mc;
  if (!mc.common_random_numbers) o.stream_offset = mc.stream_offset + point * trials;
  return o;
}

RunPlan plan_for(const McOptions& mc, std::uint64_t trials) {
  RunPlan plan;
  plan.master_seed = mc.master_seed;
  plan.workers = mc.workers;
  plan.batch_size = mc.batch_size;
  plan.trials_total = trials;
  plan.stream_offset = mc.stream_offset;
  return plan;
}

class CountingScenario final : public Scenario {
 public:
  CountingScenario(const SourceLaw& source, double eta) : source_(source), eta_(eta) {}
  std::vector<std::string> estimate_names() const override { return {"difference", "total"}; }
  void run_trial(std::uint64_t, CounterRng& rng, std::span<double> out) const override {
    const auto [a, b] = sample_detected_counts(source_, eta_, rng);
    out[0] = static_cast<double>(a - b);
    out[1] = static_cast<double>(a + b);
  }

 private:
  const SourceLaw& source_;
  double eta_;
};

// Counts of +1 and -1 outcomes for every threshold, on one set of samples.
struct ThresholdCounts {
  std::vector<std::uint64_t> plus;
  std::vector<std::uint64_t> minus;
  std::uint64_t trials = 0;
};

ThresholdCounts sample_thresholds(const SourceLaw& source, double eta,
                                  const std::vector<std::int64_t>& ks, std::uint64_t trials,
                                  const McOptions& mc) {
  ThresholdCounts init{std::vector<std::uint64_t>(ks.size(), 0),
                       std::vector<std::uint64_t>(ks.size(), 0), 0};
  auto batches = run_batched(plan_for(mc, trials), init,
                             [&](ThresholdCounts& s, std::uint64_t, CounterRng& rng) {
                               const auto [a, b] = sample_detected_counts(source, eta, rng);
                               const std::int64_t d = a - b;
                               ++s.trials;
                               for (std::size_t i = 0; i < ks.size(); ++i) {
                                 if (d > ks[i]) {
                                   ++s.plus[i];
                                 } else if (-d > ks[i]) {
                                   ++s.minus[i];
                                 }
                               }
                             });
  ThresholdCounts total = init;
  for (const auto& b : batches) {
    total.trials += b.trials;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      total.plus[i] += b.plus[i];
      total.minus[i] += b.minus[i];
    }
  }
  return total;
}

struct LinearFit {
  double a = 0.0, b = 0.0;
  double var_a = 0.0, var_b = 0.0, cov_ab = 0.0;
};

LinearFit fit_cosine(const std::vector<double>& phi, const std::vector<double>& y,
                     const std::vector<double>& se) {
  if (phi.size() < 2) throw FitError("cosine fit needs at least two phase points");
  double s_cc = 0.0, s_c = 0.0, s_1 = 0.0, s_cy = 0.0, s_y = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!(se[i] > 0.0)) throw FitError("cosine fit: standard errors must be > 0");
    const double w = 1.0 / (se[i] * se[i]);
    const double c = std::cos(phi[i]);
    s_cc += w * c * c;
    s_c += w * c;
    s_1 += w;
    s_cy += w * c * y[i];
    s_y += w * y[i];
  }
  const double det = s_cc * s_1 - s_c * s_c;
  if (!(std::abs(det) > 1e-10 * s_cc * s_1)) {
    throw FitError("cosine fit: singular normal equations (phase grid does not resolve a fringe)");
  }
  LinearFit f;
  f.a = (s_1 * s_cy - s_c * s_y) / det;
  f.b = (s_cc * s_y - s_c * s_cy) / det;
  f.var_a = s_1 / det;
  f.var_b = s_cc / det;
  f.cov_ab = -s_c / det;
  return f;
}

// (I_max, I_min) and visibility of a fitted rate fringe A cos(phi) + B,
// with I_min clamped at 0 and I_max at 1.
struct RateFringe {
  double i_max, i_min, visibility, sigma;
};

RateFringe rate_fringe(const LinearFit& f) {
  const double amp = std::abs(f.a);
  const double base = std::max(std::abs(f.b), amp);
  RateFringe r{};
  r.i_max = std::min(1.0, f.b + amp);
  r.i_min = std::clamp(f.b - amp, 0.0, r.i_max);
  r.visibility = base > 0.0 ? amp / base : 0.0;
  if (base > 0.0) {
    if (std::abs(f.b) > amp) {
      const double da = (f.a >= 0.0 ? 1.0 : -1.0) / f.b;
      const double db = -amp / (f.b * f.b);
      r.sigma = std::sqrt(std::max(0.0, da * da * f.var_a + db * db * f.var_b + 2.0 * da * db * f.cov_ab));
    } else {
      r.sigma = 0.0;
    }
  }
  return r;
}

OFStatistics assemble_of(std::int64_t k, const std::vector<double>& phi_grid,
                         std::vector<double> plus, std::vector<double> minus,
                         std::vector<std::uint64_t> trials, bool exact) {
  OFStatistics st;
  st.k = k;
  FringeScan& scan = st.scan;
  scan.strategy = ScanStrategy::of(k);
  scan.phi_grid = phi_grid;
  scan.n_trials = trials;
  double conclusive_sum = 0.0;
  bool any_conclusive = false;
  std::vector<double> cond, cond_se, cond_phi;
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const double rp = plus[i], rm = minus[i];
    const double n = static_cast<double>(trials[i]);
    scan.rate_plus.push_back(rp);
    scan.rate_minus.push_back(rm);
    scan.rate_zero.push_back(std::max(0.0, 1.0 - rp - rm));
    scan.signal.push_back(rp);
    scan.std_err.push_back(exact ? 1.0 : floored(std::sqrt(rp * (1.0 - rp) / n), trials[i]));
    conclusive_sum += rp + rm;
    if (rp + rm > 0.0) {
      any_conclusive = true;
      const double c = rp / (rp + rm);
      const double nc = exact ? 1.0 : (rp + rm) * n;
      cond.push_back(c);
      cond_se.push_back(exact ? 1.0 : floored(std::sqrt(c * (1.0 - c) / nc), static_cast<std::uint64_t>(nc)));
      cond_phi.push_back(phi_grid[i]);
    }
  }
  if (!any_conclusive) {
    throw DegenerateStatisticsError("OF statistics: no conclusive event at k=" + std::to_string(k));
  }
  st.r_mean = conclusive_sum / static_cast<double>(phi_grid.size());
  // Both ports enter through the +-1 mean E = r+ - r-; the +1 fringe is then
  // I(phi) = (R_mean + A cos phi) / 2, so I_max + I_min = R_mean.
  std::vector<double> diff, diff_se;
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const double rp = plus[i], rm = minus[i], d = rp - rm;
    diff.push_back(d);
    diff_se.push_back(exact ? 1.0
                            : floored(std::sqrt(std::max(0.0, rp + rm - d * d) /
                                                static_cast<double>(trials[i])),
                                      trials[i]));
  }
  const auto fit = fit_cosine(scan.phi_grid, diff, diff_se);
  const double amp = std::min(std::abs(fit.a), st.r_mean);
  st.visibility = amp / st.r_mean;
  st.sigma_visibility = std::sqrt(fit.var_a) / st.r_mean;
  st.i_max = 0.5 * (st.r_mean + amp);
  st.i_min = 0.5 * (st.r_mean - amp);
  if (cond.size() >= 2) {
    try {
      st.conditional_visibility = rate_fringe(fit_cosine(cond_phi, cond, cond_se)).visibility;
    } catch (const FitError&) {
      st.conditional_visibility = std::nan("");
    }
  } else {
    st.conditional_visibility = std::nan("");
  }
  return st;
}

}  // namespace

int of_classify(std::int64_t m_plus, std::int64_t m_minus, OFConfig cfg) {
  if (cfg.k < 0) throw DomainError("OF threshold k must be >= 0");
  if (m_plus < 0 || m_minus < 0) throw DomainError("photon counts must be >= 0");
  const std::int64_t d = m_plus - m_minus;
  if (d > cfg.k) return 1;
  if (-d > cfg.k) return -1;
  return 0;
}

void FringeScan::validate() const {
  const std::size_t n = phi_grid.size();
  if (signal.size() != n || std_err.size() != n || n_trials.size() != n) {
    throw DomainError("FringeScan: column lengths differ");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(phi_grid[i] > phi_grid[i - 1])) throw DomainError("FringeScan: phase grid not increasing");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (n_trials[i] > 1 && !(std_err[i] > 0.0)) {
      throw DomainError("FringeScan: std_err must be > 0 for points with several trials");
    }
  }
  if (strategy.kind == ScanKind::counting && (intensity.size() != n || intensity_err.size() != n)) {
    throw DomainError("FringeScan: counting scan without intensity column");
  }
  if (strategy.kind == ScanKind::threshold &&
      (rate_plus.size() != n || rate_zero.size() != n || rate_minus.size() != n)) {
    throw DomainError("FringeScan: threshold scan without rate columns");
  }
}

std::pair<double, double> counting_difference_stats(double phi, const GainParams& gain,
                                                    const ChannelParams& channel) {
  const auto m = detected_moments(phi, gain, channel);
  return {m.mean_difference(), m.var_difference()};
}

FringeScan scan_fringe(const std::vector<double>& phi_grid, const ExperimentParams& params,
                       std::uint64_t trials_per_point, ScanStrategy strategy, const McOptions& mc) {
  if (trials_per_point < 2) throw DomainError("scan_fringe: need at least 2 trials per point");
  if (strategy.kind == ScanKind::rate) throw DomainError("scan_fringe: rate scans are not simulated");
  if (strategy.k < 0) throw DomainError("OF threshold k must be >= 0");
  FringeScan scan;
  scan.strategy = strategy;
  scan.phi_grid = phi_grid;
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const SourceLaw source = build_source_law(phi_grid[i], params.sectors, params.channel);
    const McOptions o = point_options(mc, i, trials_per_point);
    scan.n_trials.push_back(trials_per_point);
    if (strategy.kind == ScanKind::counting) {
      CountingScenario scenario(source, params.channel.eta);
      const auto est = run_plan_execute(plan_for(o, trials_per_point), &scenario);
      const auto d = est.get("difference");
      const auto t = est.get("total");
      scan.signal.push_back(d.value);
      scan.std_err.push_back(floored(d.std_err, trials_per_point));
      scan.intensity.push_back(t.value);
      scan.intensity_err.push_back(floored(t.std_err, trials_per_point));
    } else {
      const auto counts =
          sample_thresholds(source, params.channel.eta, {strategy.k}, trials_per_point, o);
      const double n = static_cast<double>(counts.trials);
      const double rp = static_cast<double>(counts.plus[0]) / n;
      const double rm = static_cast<double>(counts.minus[0]) / n;
      scan.rate_plus.push_back(rp);
      scan.rate_minus.push_back(rm);
      scan.rate_zero.push_back(1.0 - rp - rm);
      scan.signal.push_back(rp);
      scan.std_err.push_back(floored(std::sqrt(rp * (1.0 - rp) / n), trials_per_point));
    }
  }
  scan.validate();
  return scan;
}

VisibilityFit estimate_visibility(const FringeScan& scan) {
  scan.validate();
  const auto f = fit_cosine(scan.phi_grid, scan.signal, scan.std_err);
  VisibilityFit out;
  out.amplitude = f.a;
  out.offset = f.b;
  out.sigma_amplitude = std::sqrt(f.var_a);
  out.sigma_offset = std::sqrt(f.var_b);
  out.cov_amplitude_offset = f.cov_ab;
  if (scan.strategy.kind == ScanKind::counting) {
    double sum = 0.0, var = 0.0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
      sum += scan.intensity[i];
      var += scan.intensity_err[i] * scan.intensity_err[i];
    }
    const double n = static_cast<double>(scan.size());
    const double mean = sum / n;
    const double sigma_mean = std::sqrt(var) / n;
    if (!(mean > 0.0)) throw FitError("estimate_visibility: no detected intensity");
    const double amp = std::abs(f.a);
    out.mean_intensity = mean;
    out.visibility = amp / mean;
    out.sigma = std::sqrt(f.var_a / (mean * mean) +
                          amp * amp * sigma_mean * sigma_mean / (mean * mean * mean * mean));
  } else {
    const auto r = rate_fringe(f);
    out.visibility = r.visibility;
    out.sigma = r.sigma;
  }
  return out;
}

OFStatistics of_statistics(const std::vector<double>& phi_grid, OFConfig cfg,
                           const ExperimentParams& params, std::uint64_t trials_per_point,
                           const McOptions& mc) {
  auto sweep = of_sweep(phi_grid, {cfg.k}, params, trials_per_point, mc);
  if (!sweep.front().stats) {
    throw DegenerateStatisticsError("OF statistics: no conclusive event at k=" +
                                    std::to_string(cfg.k));
  }
  return *sweep.front().stats;
}

std::vector<OFSweepEntry> of_sweep(const std::vector<double>& phi_grid,
                                   const std::vector<std::int64_t>& k_grid,
                                   const ExperimentParams& params, std::uint64_t trials_per_point,
                                   const McOptions& mc) {
  if (trials_per_point < 2) throw DomainError("of_sweep: need at least 2 trials per point");
  for (auto k : k_grid) {
    if (k < 0) throw DomainError("OF threshold k must be >= 0");
  }
  const std::size_t nk = k_grid.size();
  std::vector<std::vector<double>> plus(nk), minus(nk);
  std::vector<std::uint64_t> trials;
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    const SourceLaw source = build_source_law(phi_grid[i], params.sectors, params.channel);
    const auto counts = sample_thresholds(source, params.channel.eta, k_grid, trials_per_point,
                                          point_options(mc, i, trials_per_point));
    const double n = static_cast<double>(counts.trials);
    trials.push_back(counts.trials);
    for (std::size_t j = 0; j < nk; ++j) {
      plus[j].push_back(static_cast<double>(counts.plus[j]) / n);
      minus[j].push_back(static_cast<double>(counts.minus[j]) / n);
    }
  }
  std::vector<OFSweepEntry> out;
  for (std::size_t j = 0; j < nk; ++j) {
    OFSweepEntry e;
    e.k = k_grid[j];
    double r = 0.0;
    for (std::size_t i = 0; i < phi_grid.size(); ++i) r += plus[j][i] + minus[j][i];
    e.r_mean = phi_grid.empty() ? 0.0 : r / static_cast<double>(phi_grid.size());
    try {
      e.stats = assemble_of(k_grid[j], phi_grid, plus[j], minus[j], trials, false);
    } catch (const DegenerateStatisticsError&) {
      e.stats.reset();
    }
    out.push_back(std::move(e));
  }
  return out;
}

OFStatistics of_statistics_exact(const std::vector<double>& phi_grid, OFConfig cfg,
                                 const ExperimentParams& params) {
  if (cfg.k < 0) throw DomainError("OF threshold k must be >= 0");
  std::vector<double> plus, minus;
  for (double phi : phi_grid) {
    const SourceLaw source = build_source_law(phi, params.sectors, params.channel);
    const DetectedJointLaw law(source, params.channel.eta);
    const std::int64_t ext = law.extent();
    double rp = 0.0, rm = 0.0;
    for (std::int64_t a = 0; a < ext; ++a) {
      for (std::int64_t b = 0; b < ext; ++b) {
        const std::int64_t d = a - b;
        if (d > cfg.k) {
          rp += law.probability(a, b);
        } else if (-d > cfg.k) {
          rm += law.probability(a, b);
        }
      }
    }
    plus.push_back(rp);
    minus.push_back(rm);
  }
  return assemble_of(cfg.k, phi_grid, plus, minus,
                     std::vector<std::uint64_t>(phi_grid.size(), 0), true);
}

csv::Table scan_to_table(const FringeScan& scan) {
  scan.validate();
  csv::Table t;
  t.metadata.emplace_back("strategy", kind_name(scan.strategy.kind));
  t.metadata.emplace_back("k", csv::format_int(scan.strategy.k));
  t.header = {"phi", "signal", "std_err", "n_trials"};
  const bool counting = scan.strategy.kind == ScanKind::counting;
  const bool threshold = scan.strategy.kind == ScanKind::threshold;
  if (counting) {
    t.header.insert(t.header.end(), {"intensity", "intensity_err"});
  } else if (threshold) {
    t.header.insert(t.header.end(), {"rate_plus", "rate_zero", "rate_minus"});
  }
  for (std::size_t i = 0; i < scan.size(); ++i) {
    std::vector<std::string> row = {csv::format_double(scan.phi_grid[i]),
                                    csv::format_double(scan.signal[i]),
                                    csv::format_double(scan.std_err[i]),
                                    csv::format_int(static_cast<std::int64_t>(scan.n_trials[i]))};
    if (counting) {
      row.push_back(csv::format_double(scan.intensity[i]));
      row.push_back(csv::format_double(scan.intensity_err[i]));
    } else if (threshold) {
      row.push_back(csv::format_double(scan.rate_plus[i]));
      row.push_back(csv::format_double(scan.rate_zero[i]));
      row.push_back(csv::format_double(scan.rate_minus[i]));
    }
    t.add_row(std::move(row));
  }
  return t;
}

void write_scan_csv(std::ostream& out, const FringeScan& scan) { csv::write(out, scan_to_table(scan)); }

FringeScan read_scan_csv(std::istream& in) { return scan_from_table(csv::read(in)); }

FringeScan scan_from_table(const csv::Table& t) {
  FringeScan scan;
  if (const auto* s = t.meta("strategy")) scan.strategy.kind = kind_from(*s);
  if (const auto* k = t.meta("k")) scan.strategy.k = csv::parse_int(*k);
  const auto c_phi = t.column("phi"), c_sig = t.column("signal"), c_se = t.column("std_err"),
             c_n = t.column("n_trials");
  for (const auto& row : t.rows) {
    scan.phi_grid.push_back(csv::parse_double(row[c_phi]));
    scan.signal.push_back(csv::parse_double(row[c_sig]));
    scan.std_err.push_back(csv::parse_double(row[c_se]));
    scan.n_trials.push_back(static_cast<std::uint64_t>(csv::parse_int(row[c_n])));
    if (scan.strategy.kind == ScanKind::counting) {
      scan.intensity.push_back(csv::parse_double(row[t.column("intensity")]));
      scan.intensity_err.push_back(csv::parse_double(row[t.column("intensity_err")]));
    } else if (scan.strategy.kind == ScanKind::threshold) {
      scan.rate_plus.push_back(csv::parse_double(row[t.column("rate_plus")]));
      scan.rate_zero.push_back(csv::parse_double(row[t.column("rate_zero")]));
      scan.rate_minus.push_back(csv::parse_double(row[t.column("rate_minus")]));
    }
  }
  scan.validate();
  return scan;
}

}  // namespace qiopa
