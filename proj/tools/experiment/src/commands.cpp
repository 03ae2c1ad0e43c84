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

#include "qiopa/experiment/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/random/normal_distribution.hpp>

#include "qiopa/calibration.hpp"
#include "qiopa/channel.hpp"
#include "qiopa/detection.hpp"
#include "qiopa/error.hpp"
#include "qiopa/fock.hpp"
#include "qiopa/mc.hpp"
#include "qiopa/metrology.hpp"
#include "qiopa/oracle.hpp"
#include "qiopa/rng.hpp"

namespace qiopa::experiment {

namespace {

using csv::format_double;
using csv::format_int;
using std::numbers::pi;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

std::vector<double> logspace(double lo_exp, double hi_exp, int n) {
  std::vector<double> out;
  for (double e : linspace(lo_exp, hi_exp, n)) out.push_back(std::pow(10.0, e));
  return out;
}

ChannelParams channel_of(const ScenarioConfig& c) {
  ChannelParams ch;
  ch.p = c.physics.p;
  ch.eta = c.physics.eta;
  ch.seed_visibility = c.physics.seed_visibility;
  return ch;
}

ExperimentParams experiment_of(const ScenarioConfig& c, double g) {
  ExperimentParams e;
  e.sectors = SectorPair::build(GainParams::from_gain(g));
  e.channel = channel_of(c);
  return e;
}

McOptions mc_of(const ScenarioConfig& c, std::uint64_t stream_offset = 0) {
  McOptions o;
  o.master_seed = c.run.master_seed;
  o.workers = c.resolved_workers();
  o.batch_size = c.run.batch_size;
  o.stream_offset = stream_offset;
  return o;
}

CommandOutcome start(const ScenarioConfig& c) {
  CommandOutcome out;
  auto& a = out.archive;
  a.command = to_string(c.kind);
  a.config_hash = c.hash();
  a.config = c.to_json();
  a.master_seed = c.run.master_seed;
  a.workers = c.resolved_workers();
  return out;
}

std::string fmt_flag(bool b) { return b ? "1" : "0"; }

// Visibility of a counting fringe predicted by the detected moments.
double model_counting_visibility(const GainParams& g, const ChannelParams& ch) {
  const double total = 2.0 * g.nbar + ch.p * g.c;
  return total > 0.0 ? ch.p * ch.seed_visibility * g.c / total : 0.0;
}

FisherMethod fisher_method_of(const std::string& s) {
  if (s == "exact") return FisherMethod::exact;
  if (s == "gaussian") return FisherMethod::gaussian;
  return FisherMethod::automatic;
}

}  // namespace

CommandOutcome cmd_fringe(const ScenarioConfig& c) {
  auto out = start(c);
  const auto phases = c.physics.phases();
  const auto trials = c.run.trials;
  const auto single = experiment_of(c, 0.0);
  const auto amplified = experiment_of(c, c.physics.g);
  const auto s0 = scan_fringe(phases, single, trials, ScanStrategy::counting(), mc_of(c, 0));
  const auto s1 = scan_fringe(phases, amplified, trials, ScanStrategy::counting(),
                              mc_of(c, phases.size() * trials));
  out.archive.add_table("fringe_single.csv", scan_to_table(s0));
  out.archive.add_table("fringe_amplified.csv", scan_to_table(s1));

  csv::Table vis;
  vis.header = {"probe", "g", "visibility", "sigma", "amplitude", "offset", "mean_intensity",
                "model_visibility"};
  for (const auto* e : {&single, &amplified}) {
    const auto& scan = e == &single ? s0 : s1;
    const auto v = estimate_visibility(scan);
    const double model = model_counting_visibility(e->sectors.gain, e->channel);
    vis.add_row({e == &single ? "single" : "amplified", format_double(e->sectors.gain.g),
                 format_double(v.visibility), format_double(v.sigma), format_double(v.amplitude),
                 format_double(v.offset), format_double(v.mean_intensity), format_double(model)});
    out.summary.push_back(std::string(e == &single ? "single-photon" : "amplified") +
                          " visibility " + format_double(v.visibility) + " +/- " +
                          format_double(v.sigma) + " (model " + format_double(model) + ")");
  }
  out.archive.add_table("visibility.csv", std::move(vis));
  return out;
}

CommandOutcome cmd_enhancement_map(const ScenarioConfig& c) {
  auto out = start(c);
  const int n = c.options.grid_points;
  const auto g_grid = c.physics.g_grid.empty() ? linspace(0.0, 6.0, n) : c.physics.g_grid;
  const auto eta_grid = c.physics.eta_grid.empty() ? logspace(-5.0, 0.0, n) : c.physics.eta_grid;
  const auto p_grid = c.physics.p_grid.empty() ? linspace(0.02, 1.0, n) : c.physics.p_grid;
  std::vector<double> eta_crit;
  if (c.physics.eta_grid.empty()) {
    eta_crit = linspace(0.0, 0.48, n);
    eta_crit.front() = 1e-3;
    eta_crit.push_back(1.0 / 3.0);
    std::sort(eta_crit.begin(), eta_crit.end());
  } else {
    eta_crit = c.physics.eta_grid;
  }

  std::uint64_t cells = 0;
  for (const auto& panel : c.options.panels) {
    if (panel == "fig2a") cells += g_grid.size() * eta_grid.size();
    if (panel == "fig2b" || panel == "fig2c") cells += p_grid.size() * eta_grid.size();
    if (panel == "fig2d") cells += eta_crit.size();
  }
  if (cells > c.options.max_cells) {
    throw ConfigError("enhancement map: " + std::to_string(cells) + " cells exceed options.max_cells=" +
                      std::to_string(c.options.max_cells));
  }

  auto p_crit_text = [](double eta) {
    if (!(eta < 0.5)) return std::string("nan");
    return format_double(critical_injection(eta).p_crit);
  };
  auto enhancement_rows = [&](double g, double p, double eta, csv::Table& t) {
    const auto gp = GainParams::from_gain(g);
    const double e = enhancement(gp, p, eta);
    t.add_row({format_double(g), format_double(p), format_double(eta), format_double(e),
               format_double(std::log10(e)), format_double(enhancement_limit(p, eta)),
               p_crit_text(eta), high_loss_regime(gp, eta) ? "high_loss" : "general"});
  };
  const std::vector<std::string> header = {"g", "p", "eta", "E", "log10_E", "E_lim", "p_crit",
                                           "regime_flag"};

  for (const auto& panel : c.options.panels) {
    csv::Table t;
    if (panel == "fig2a") {
      t.header = header;
      for (double g : g_grid)
        for (double eta : eta_grid) enhancement_rows(g, c.physics.p, eta, t);
    } else if (panel == "fig2b") {
      t.header = header;
      for (double p : p_grid)
        for (double eta : eta_grid) enhancement_rows(c.physics.g, p, eta, t);
    } else if (panel == "fig2c") {
      t.header = {"p", "eta", "E_lim", "log10_E_lim", "unity_level"};
      for (double p : p_grid) {
        for (double eta : eta_grid) {
          const double lim = enhancement_limit(p, eta);
          t.add_row({format_double(p), format_double(eta), format_double(lim),
                     format_double(std::log10(lim)), fmt_flag(lim >= 1.0)});
        }
      }
    } else {
      t.header = {"eta", "p_crit", "achievable"};
      for (double eta : eta_crit) {
        const bool ok = eta < 0.5 && critical_injection(eta).achievable;
        t.add_row({format_double(eta), p_crit_text(eta), fmt_flag(ok)});
      }
    }
    out.summary.push_back(panel + ": " + std::to_string(t.rows.size()) + " rows");
    out.archive.add_table("enhancement_" + panel + ".csv", std::move(t));
  }
  return out;
}

CommandOutcome cmd_of_tradeoff(const ScenarioConfig& c) {
  auto out = start(c);
  const auto phases = c.physics.phases();
  std::vector<std::int64_t> ks = c.physics.k_grid;
  if (ks.empty()) {
    for (std::int64_t k = 0; k <= 90; k += 10) ks.push_back(k);
  }
  const auto params = experiment_of(c, c.physics.g);
  auto mc = mc_of(c);
  mc.common_random_numbers = c.options.common_random_numbers;
  const auto sweep = of_sweep(phases, ks, params, c.run.trials, mc);
  const double p = c.physics.p, eta = c.physics.eta;

  csv::Table t;
  t.header = {"k", "conclusive", "R_mean", "I_max", "I_min", "V", "sigma_V", "V_conditional",
              "S_OF", "E_OF"};
  double best_of = 0.0;
  std::int64_t best_k = -1;
  for (const auto& e : sweep) {
    if (!e.stats) {
      t.add_row({format_int(e.k), "0", format_double(e.r_mean), "nan", "nan", "nan", "nan", "nan",
                 "nan", "nan"});
      continue;
    }
    const auto& st = *e.stats;
    const double s = of_sensitivity(st, pi / 2);
    const double e_of = s * s / (p * eta);
    if (e_of > best_of) {
      best_of = e_of;
      best_k = e.k;
    }
    t.add_row({format_int(e.k), "1", format_double(st.r_mean), format_double(st.i_max),
               format_double(st.i_min), format_double(st.visibility),
               format_double(st.sigma_visibility), format_double(st.conditional_visibility),
               format_double(s), format_double(e_of)});
    out.archive.add_table("of_scan_k" + std::to_string(e.k) + ".csv", scan_to_table(st.scan));
  }
  out.archive.add_table("of_tradeoff.csv", std::move(t));

  const double s_count = moment_sensitivity(pi / 2, params.sectors.gain, params.channel);
  const double e_count = s_count * s_count / (p * eta);
  csv::Table cmp;
  cmp.header = {"strategy", "k", "E"};
  cmp.add_row({"counting", "nan", format_double(e_count)});
  cmp.add_row({"threshold_best", best_k >= 0 ? format_int(best_k) : "nan", format_double(best_of)});
  out.archive.add_table("of_comparison.csv", std::move(cmp));
  out.summary.push_back("counting E " + format_double(e_count) + ", best threshold E " +
                        format_double(best_of) + " at k=" + std::to_string(best_k));
  return out;
}

CommandOutcome cmd_fisher(const ScenarioConfig& c) {
  auto out = start(c);
  const auto gain = GainParams::from_gain(c.physics.g);
  const auto ch = channel_of(c);
  const auto method = fisher_method_of(c.options.fisher_method);
  csv::Table t;
  t.header = {"phi", "F_classical", "S2", "H_ampl", "cr_ratio", "method", "excluded_mass",
              "high_loss_valid"};
  for (double phi : c.physics.phases()) {
    FisherReport r;
    try {
      r = fisher_report(phi, gain, ch, method);
    } catch (const DegenerateStatisticsError&) {
      // D has zero variance here; the moment sensitivity is undefined.
      const auto f = classical_fisher_information(phi, gain, ch, method);
      r.phi = phi;
      r.classical_fisher = f.value;
      r.method = f.method;
      r.excluded_mass = f.excluded_mass;
      r.quantum_fisher_highloss = quantum_fisher_highloss(gain, ch.p, ch.eta).value;
      r.high_loss_valid = high_loss_regime(gain, ch.eta);
      r.s_squared = std::nan("");
      r.cr_ratio = std::nan("");
    } catch (const RegimeError& e) {
      throw RegimeError(std::string(e.what()) +
                        "; set options.fisher_method to \"gaussian\" or \"automatic\" for the "
                        "labelled Gaussian fallback");
    }
    t.add_row({format_double(phi), format_double(r.classical_fisher), format_double(r.s_squared),
               format_double(r.quantum_fisher_highloss), format_double(r.cr_ratio),
               to_string(r.method), format_double(r.excluded_mass), fmt_flag(r.high_loss_valid)});
  }
  out.summary.push_back("fisher: " + std::to_string(t.rows.size()) + " phases");
  out.archive.add_table("fisher.csv", std::move(t));
  return out;
}

CommandOutcome cmd_calibrate(const ScenarioConfig& c) {
  auto out = start(c);
  CalibrationDataset data;
  if (!c.options.data.empty()) {
    const auto path = std::filesystem::path(c.base_dir) / c.options.data;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open calibration data '" + path.string() + "'");
    data = read_calibration_csv(in, power_mode_from_string(c.options.power_mode));
  } else {
    data.power_mode = PowerMode::normalized;
    const int n = c.options.synthetic_points;
    for (int i = 1; i <= n; ++i) {
      const double power = static_cast<double>(i) / n;
      double counts = model_counts(gain_power_map(power, 1.0, c.physics.g), c.physics.eta);
      if (c.options.synthetic_noise > 0.0) {
        CounterRng rng(c.run.master_seed, static_cast<std::uint64_t>(i));
        boost::random::normal_distribution<double> nd(0.0, 1.0);
        counts *= 1.0 + c.options.synthetic_noise * nd(rng);
      }
      data.points.push_back({power, counts, 1.0});
    }
  }
  if (data.weight_mode != WeightMode::explicit_weights) {
    data.weight_mode = c.options.weights == "unweighted" ? WeightMode::unweighted : WeightMode::poisson;
  }
  const auto fit = fit_gain(data);

  csv::Table curve;
  curve.metadata.emplace_back("power_mode", to_string(data.power_mode));
  curve.header = {"power", "counts", "g", "model", "residual"};
  const double p_max = data.p_max();
  for (const auto& pt : data.sorted()) {
    const double g = gain_power_map(pt.power, p_max, fit.g_max);
    const double m = model_counts(g, fit.eta_fit);
    curve.add_row({format_double(pt.power), format_double(pt.counts), format_double(g),
                   format_double(m), format_double(pt.counts - m)});
  }
  out.archive.add_table("calibration_curve.csv", std::move(curve));

  csv::Table f;
  f.header = {"g_max", "g_max_halfwidth", "eta_fit", "eta_halfwidth", "residual_norm"};
  f.add_row({format_double(fit.g_max), format_double(fit.g_max_halfwidth), format_double(fit.eta_fit),
             format_double(fit.eta_halfwidth), format_double(fit.residual_norm)});
  out.archive.add_table("calibration_fit.csv", std::move(f));
  out.archive.texts.emplace_back("calibration_fit.json", format_fit_report(fit));
  out.summary.push_back("g_max " + format_double(fit.g_max) + " +/- " + format_double(fit.g_max_halfwidth) +
                        ", eta " + format_double(fit.eta_fit) + " +/- " + format_double(fit.eta_halfwidth));
  return out;
}

CommandOutcome cmd_oracle_check(const ScenarioConfig& c) {
  auto out = start(c);
  constexpr double kBound = 1e-10;
  constexpr double kSignificance = 1e-3;
  const int dim = c.options.oracle_dim;
  // Test hook: a relative error far above the bound in one closed form.
  const double corrupt = c.options.corrupt_formula ? 1.0 + 1e-6 : 1.0;

  csv::Table t;
  t.header = {"check", "g", "value", "bound", "passed"};
  auto record = [&](const std::string& name, double g, double value, double bound, bool passed) {
    t.add_row({name, format_double(g), format_double(value), format_double(bound), fmt_flag(passed)});
    out.checks_passed = out.checks_passed && passed;
    if (!passed) out.summary.push_back("FAILED " + name + " at g=" + format_double(g));
  };

  for (double g : c.options.oracle_gains) {
    const auto gp = GainParams::from_gain(g);
    const auto vac = squeezed_vacuum_distribution(gp, TruncationPolicy::tail(1e-16));
    const auto one = squeezed_single_photon_distribution(gp, TruncationPolicy::tail(1e-16));
    const auto o0 = small_g_oracle_mode(0, g, dim);
    const auto o1 = small_g_oracle_mode(1, g, dim);
    double d0 = 0.0, d1 = 0.0;
    for (int n = 0; n < dim; ++n) {
      d0 = std::max(d0, std::abs(corrupt * vac.prob(n) - o0.prob(n)));
      d1 = std::max(d1, std::abs(one.prob(n) - o1.prob(n)));
    }
    record("squeezed_vacuum", g, d0, kBound, d0 <= kBound);
    record("squeezed_single_photon", g, d1, kBound, d1 <= kBound);

    // Sampled (m+, m-) histogram against the exact thinned law.
    ChannelParams ch;
    ch.p = 0.5;
    ch.eta = 0.3;
    const auto source = build_source_law(pi / 3, gp, ch);
    const DetectedJointLaw law(source, ch.eta);
    const int ext = 16;
    std::vector<double> probs;
    double covered = 0.0;
    for (int a = 0; a < ext; ++a) {
      for (int b = 0; b < ext; ++b) {
        probs.push_back(law.probability(a, b));
        covered += probs.back();
      }
    }
    probs.push_back(std::max(0.0, 1.0 - covered));
    RunPlan plan;
    plan.master_seed = c.run.master_seed;
    plan.workers = c.resolved_workers();
    plan.trials_total = c.options.sampler_trials;
    plan.batch_size = c.run.batch_size;
    const auto batches = run_batched(plan, std::vector<std::uint64_t>(probs.size(), 0),
                                     [&](std::vector<std::uint64_t>& h, std::uint64_t, CounterRng& rng) {
                                       const auto [a, b] = sample_detected_counts(source, ch.eta, rng);
                                       ++h[(a < ext && b < ext) ? static_cast<std::size_t>(a * ext + b)
                                                                : h.size() - 1];
                                     });
    std::vector<std::uint64_t> hist(probs.size(), 0);
    for (const auto& h : batches) {
      for (std::size_t i = 0; i < h.size(); ++i) hist[i] += h[i];
    }
    const double n = static_cast<double>(plan.trials_total);
    double stat = 0.0, pooled_e = 0.0, pooled_o = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double e = probs[i] * n, o = static_cast<double>(hist[i]);
      if (e < 5.0) {
        pooled_e += e;
        pooled_o += o;
        continue;
      }
      stat += (o - e) * (o - e) / e;
      ++cells;
    }
    if (pooled_e > 0.0) {
      stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
      ++cells;
    }
    double pvalue = 1.0;
    if (cells >= 2) {
      boost::math::chi_squared dist(cells - 1);
      pvalue = boost::math::cdf(boost::math::complement(dist, stat));
    }
    record("sampler_chi_square_pvalue", g, pvalue, kSignificance, pvalue >= kSignificance);
  }
  out.archive.add_table("oracle_check.csv", std::move(t));
  if (out.checks_passed) out.summary.push_back("all oracle checks passed");
  return out;
}

CommandOutcome run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  CommandOutcome out;
  switch (config.kind) {
    case ScenarioKind::fringe: out = cmd_fringe(config); break;
    case ScenarioKind::enhancement_map: out = cmd_enhancement_map(config); break;
    case ScenarioKind::of_tradeoff: out = cmd_of_tradeoff(config); break;
    case ScenarioKind::fisher: out = cmd_fisher(config); break;
    case ScenarioKind::calibrate: out = cmd_calibrate(config); break;
    case ScenarioKind::oracle_check: out = cmd_oracle_check(config); break;
  }
  out.archive.started_utc = started;
  out.archive.finished_utc = utc_now();
  out.archive.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace qiopa::experiment
