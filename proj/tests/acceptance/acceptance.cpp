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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --criterion 7   run one (repeatable)
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/random/normal_distribution.hpp>
#include <CLI11.hpp>

#include "qiopa/calibration.hpp"
#include "qiopa/channel.hpp"
#include "qiopa/detection.hpp"
#include "qiopa/experiment/commands.hpp"
#include "qiopa/fock.hpp"
#include "qiopa/mc.hpp"
#include "qiopa/metrology.hpp"
#include "qiopa/oracle.hpp"
#include "qiopa/rng.hpp"

namespace {

using namespace qiopa;
using std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string num(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double rel(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

ChannelParams channel(double p, double eta, double vs = 1.0) {
  ChannelParams c;
  c.p = p;
  c.eta = eta;
  c.seed_visibility = vs;
  return c;
}

McOptions mc(std::uint64_t seed, unsigned workers = 1) {
  McOptions o;
  o.master_seed = seed;
  o.workers = workers;
  return o;
}

// Counting sensitivity at phi = pi/2 from the sector moments, evaluated in
// long double without going through the library's moment code.
long double reference_enhancement(long double g, long double p, long double eta) {
  const long double sh = std::sinh(g);
  const long double n = sh * sh;
  const long double mu_e = n, var_e = 2 * n * (n + 1);
  const long double mu_o = 3 * n + 1, var_o = 6 * n * (n + 1);
  auto thin_var = [eta](long double mu, long double var) { return eta * eta * var + eta * (1 - eta) * mu; };
  const long double d = eta * (mu_o - mu_e);  // <D> inside each probe law
  const long double v_probe = thin_var(mu_o, var_o) + thin_var(mu_e, var_e);
  const long double v_vac = 2 * thin_var(mu_e, var_e);
  const long double var_d = p * (v_probe + d * d) + (1 - p) * v_vac;
  const long double slope = p * d;
  return slope * slope / var_d / (p * eta);
}

Outcome criterion1() {
  Outcome o;
  const auto gp = GainParams::from_gain(4.5);
  const double s = sensitivity_amplified_closed_form(gp, 0.15, 3e-4, 1.0);
  const double e = s * s / (0.15 * 3e-4);
  const double ref = static_cast<double>(reference_enhancement(4.5L, 0.15L, 3e-4L));
  o.check(rel(e, ref) <= 1e-6, "E from S^2/(p eta) = " + num(e, 10) + " vs reference " + num(ref, 10) +
                                   " (rel " + num(rel(e, ref), 3) + ")");
  o.check(rel(enhancement(gp, 0.15, 3e-4), ref) <= 1e-6, "enhancement() = " + num(enhancement(gp, 0.15, 3e-4), 10));
  o.check(std::round(e) >= 221.0 && std::round(e) <= 223.0, "E rounds to about 222");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto g0 = GainParams::from_gain(0.0);
  double worst = 0.0;
  for (double p : {1e-3, 0.05, 0.15, 0.5, 0.9, 1.0}) {
    for (double eta : {1e-6, 1e-4, 3e-4, 0.01, 0.2, 0.5, 1.0}) {
      worst = std::max(worst, std::abs(enhancement(g0, p, eta) - 1.0));
    }
  }
  o.check(worst <= 1e-12, "max |E(g=0) - 1| over a (p, eta) grid = " + num(worst, 3));

  // MC fringe at g = 0 against the single-photon law <D> = p eta V_s cos(phi).
  const double p = 0.5, eta = 0.3, vs = 0.9;
  ExperimentParams params{SectorPair::build(g0), channel(p, eta, vs)};
  std::vector<double> phases;
  for (int i = 0; i < 8; ++i) phases.push_back(2.0 * pi * i / 8.0);
  const auto scan = scan_fringe(phases, params, 1000000, ScanStrategy::counting(), mc(2));
  double worst_z = 0.0, worst_zi = 0.0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const double expect = p * eta * vs * std::cos(phases[i]);
    worst_z = std::max(worst_z, std::abs(scan.signal[i] - expect) / scan.std_err[i]);
    worst_zi = std::max(worst_zi, std::abs(scan.intensity[i] - p * eta) / scan.intensity_err[i]);
  }
  o.check(worst_z <= 4.0, "g=0 MC <D> within " + num(worst_z, 3) + " SE of p eta V_s cos(phi) (1e6 trials/phase)");
  o.check(worst_zi <= 4.0, "g=0 MC <m+ + m-> within " + num(worst_zi, 3) + " SE of p eta");
  const auto v = estimate_visibility(scan);
  o.check(std::abs(v.visibility - vs) <= 4.0 * v.sigma,
          "fitted visibility " + num(v.visibility) + " +/- " + num(v.sigma, 3) + " vs V_s = " + num(vs));
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto g8 = GainParams::from_gain(8.0);
  const double e = enhancement(g8, 0.5, 0.01);
  const double lim = enhancement_limit(0.5, 0.01);
  o.check(std::abs(lim - 25.0) <= 1e-12, "E_lim(0.5, 0.01) = " + num(lim, 12));
  o.check(rel(e, lim) <= 0.01, "E(g=8, p=0.5, eta=0.01) = " + num(e) + " within " + num(100 * rel(e, lim), 3) + "% of E_lim");
  const double pc3 = critical_injection(1.0 / 3.0).p_crit;
  o.check(pc3 == 1.0, "p_crit(1/3) = " + num(pc3, 17));
  const double pc = critical_injection(0.1).p_crit;
  const double above = enhancement(g8, pc + 0.05, 0.1), below = enhancement(g8, pc - 0.05, 0.1);
  o.check(above > 1.0, "E(g=8, p_crit+0.05, eta=0.1) = " + num(above));
  o.check(below < 1.0, "E(g=8, p_crit-0.05, eta=0.1) = " + num(below));
  return o;
}

Outcome criterion4() {
  Outcome o;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const auto gp = GainParams::from_gain(3.0 * u(gen));
    const double p = 0.01 + 0.99 * u(gen);
    const double eta = std::pow(10.0, -5.0 + 5.0 * u(gen));
    const double s_m = moment_sensitivity(pi / 2, gp, channel(p, eta));
    const double s_c = sensitivity_amplified_closed_form(gp, p, eta, 1.0);
    worst = std::max(worst, rel(s_m, s_c));
  }
  o.check(worst <= 1e-6, "25 random tuples, max rel diff moment vs closed form = " + num(worst, 3));
  return o;
}

Outcome criterion5() {
  Outcome o;
  for (double g : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    const auto gp = GainParams::from_gain(g);
    const auto vac = squeezed_vacuum_distribution(gp, TruncationPolicy::tail(1e-16));
    const auto one = squeezed_single_photon_distribution(gp, TruncationPolicy::tail(1e-16));
    const auto o0 = small_g_oracle_mode(0, g);
    const auto o1 = small_g_oracle_mode(1, g);
    double d0 = 0.0, d1 = 0.0;
    for (std::int64_t n = 0; n < o0.size(); ++n) {
      d0 = std::max(d0, std::abs(vac.prob(n) - o0.prob(n)));
      d1 = std::max(d1, std::abs(one.prob(n) - o1.prob(n)));
    }
    o.check(d0 <= 1e-10 && d1 <= 1e-10,
            "g=" + num(g) + ": max deviation vacuum " + num(d0, 3) + ", single photon " + num(d1, 3));
  }
  return o;
}

double chi_square_pvalue(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs,
                         double n) {
  double stat = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * n, ob = static_cast<double>(observed[i]);
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += ob;
      continue;
    }
    stat += (ob - e) * (ob - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

Outcome criterion6() {
  Outcome o;
  {
    const auto ch = channel(0.5, 0.3);
    const auto source = build_source_law(pi / 3, GainParams::from_gain(1.0), ch, TruncationPolicy::tail(1e-14));
    const DetectedJointLaw law(source, ch.eta);
    const std::int64_t ext = 24;
    std::vector<double> probs;
    double covered = 0.0;
    for (std::int64_t a = 0; a < ext; ++a) {
      for (std::int64_t b = 0; b < ext; ++b) {
        probs.push_back(law.probability(a, b));
        covered += probs.back();
      }
    }
    probs.push_back(std::max(0.0, 1.0 - covered));
    RunPlan plan;
    plan.master_seed = 6;
    plan.trials_total = 1000000;
    const auto batches = run_batched(plan, std::vector<std::uint64_t>(probs.size(), 0),
                                     [&](std::vector<std::uint64_t>& h, std::uint64_t, CounterRng& rng) {
                                       const auto [a, b] = sample_detected_counts(source, ch.eta, rng);
                                       ++h[(a < ext && b < ext) ? static_cast<std::size_t>(a * ext + b) : h.size() - 1];
                                     });
    std::vector<std::uint64_t> hist(probs.size(), 0);
    for (const auto& h : batches) {
      for (std::size_t i = 0; i < h.size(); ++i) hist[i] += h[i];
    }
    const double pv = chi_square_pvalue(hist, probs, 1e6);
    o.check(pv >= 1e-3, "chi-square of 1e6 (m+, m-) samples at g=1, p=0.5, eta=0.3, phi=pi/3: p-value " + num(pv, 4));
  }

  std::mt19937_64 gen(66);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_mean = 0.0, worst_var = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto gp = GainParams::from_gain(0.2 + 2.3 * u(gen));
    const double eta = 0.01 + 0.89 * u(gen);
    const bool odd = u(gen) < 0.5;
    const auto dist = odd ? squeezed_single_photon_distribution(gp) : squeezed_vacuum_distribution(gp);
    const FockSampler sampler(dist);
    const auto expect = odd ? thinned_moments(squeezed_single_photon_mean(gp), squeezed_single_photon_variance(gp), eta)
                            : thinned_moments(squeezed_vacuum_mean(gp), squeezed_vacuum_variance(gp), eta);
    RunPlan plan;
    plan.master_seed = 60 + static_cast<std::uint64_t>(i);
    plan.trials_total = 200000;
    const auto batches = run_batched(plan, std::vector<double>{},
                                     [&](std::vector<double>& xs, std::uint64_t, CounterRng& rng) {
                                       xs.push_back(static_cast<double>(binomial_sample(sampler.sample(rng.uniform()), eta, rng)));
                                     });
    std::vector<double> xs;
    for (const auto& b : batches) xs.insert(xs.end(), b.begin(), b.end());
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      const double d = (x - mean) * (x - mean);
      m2 += d;
      m4 += d * d;
    }
    const double var = m2 / (n - 1.0);
    const double se_mean = std::sqrt(var / n);
    const double se_var = std::sqrt(std::max(0.0, m4 / n - var * var) / n);
    worst_mean = std::max(worst_mean, std::abs(mean - expect.mean) / se_mean);
    worst_var = std::max(worst_var, std::abs(var - expect.variance) / se_var);
  }
  o.check(worst_mean <= 4.0, "thinned mean at 10 random points: worst " + num(worst_mean, 3) + " SE");
  o.check(worst_var <= 4.0, "thinned variance at 10 random points: worst " + num(worst_var, 3) + " SE");
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(2.0 * pi * i / 16.0);
  const auto gp = GainParams::from_gain(4.5);
  const double expect = fringe_visibility(gp);
  ExperimentParams amp{SectorPair::build(gp), channel(1.0, 1.0)};
  const auto v = estimate_visibility(scan_fringe(phases, amp, 100000, ScanStrategy::counting(), mc(7)));
  o.check(std::abs(v.visibility - expect) <= 2.0 * v.sigma,
          "g=4.5 ideal: V = " + num(v.visibility) + " +/- " + num(v.sigma, 3) + " vs (2n+1)/(4n+1) = " + num(expect));
  ExperimentParams bare{SectorPair::build(GainParams::from_gain(0.0)), channel(1.0, 1.0)};
  const auto v0 = estimate_visibility(scan_fringe(phases, bare, 100000, ScanStrategy::counting(), mc(8)));
  o.check(std::abs(v0.visibility - 1.0) <= std::max(2.0 * v0.sigma, 1e-12),
          "g=0 ideal: V = " + num(v0.visibility, 12) + " +/- " + num(v0.sigma, 3));
  return o;
}

Outcome criterion8() {
  Outcome o;
  for (double g : {2.0, 3.0}) {
    const auto gp = GainParams::from_gain(g);
    for (double p : {0.1, 0.2, 0.5}) {
      for (double eta : {1e-5, 1e-4}) {
        const auto ch = channel(p, eta);
        const auto f = classical_fisher_information(pi / 2, gp, ch, FisherMethod::exact);
        const double s = moment_sensitivity(pi / 2, gp, ch);
        const double h = quantum_fisher_highloss(gp, p, eta).value;
        const double rf = s * s / f.value, rh = s * s / h;
        const std::string where = "g=" + num(g) + " p=" + num(p) + " eta=" + num(eta) + ": ";
        o.check(rf >= 0.99 && rf <= 1.001, where + "S^2/F = " + num(rf, 8));
        o.check(rh >= 0.99 && rh <= 1.01, where + "S^2/H_ampl = " + num(rh, 8));
      }
    }
  }
  return o;
}

Outcome criterion9() {
  Outcome o;
  const double p = 0.14, eta = 0.005;
  const auto gp = GainParams::from_gain(4.5);
  ExperimentParams params{SectorPair::build(gp), channel(p, eta)};
  std::vector<double> phases;
  for (int i = 0; i < 8; ++i) phases.push_back(2.0 * pi * i / 8.0);
  std::vector<std::int64_t> ks;
  for (std::int64_t k = 0; k <= 90; k += 10) ks.push_back(k);
  auto opts = mc(9);
  opts.common_random_numbers = true;
  const auto sweep = of_sweep(phases, ks, params, 1000000, opts);

  bool all_conclusive = true, r_ok = true, v_ok = true;
  double worst_identity = 0.0, best_of = 0.0;
  std::int64_t best_k = -1;
  std::string rows;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!sweep[i].stats) {
      all_conclusive = false;
      continue;
    }
    const auto& st = *sweep[i].stats;
    if (i > 0 && sweep[i - 1].stats) {
      const auto& prev = *sweep[i - 1].stats;
      if (st.r_mean > prev.r_mean) r_ok = false;
      if (st.visibility < prev.visibility) v_ok = false;
    }
    const double s = of_sensitivity(st, pi / 2);
    worst_identity = std::max(worst_identity, rel(s, st.visibility * std::sqrt(st.r_mean)));
    const double e = s * s / (p * eta);
    if (e > best_of) {
      best_of = e;
      best_k = st.k;
    }
    rows += " k=" + std::to_string(st.k) + ":R=" + num(st.r_mean, 4) + ",V=" + num(st.visibility, 4);
  }
  o.notes.push_back("sweep" + rows);
  o.check(all_conclusive, "every k in 0..90 has conclusive outcomes");
  o.check(r_ok, "R_mean nonincreasing in k");
  o.check(v_ok, "V nondecreasing in k");
  o.check(worst_identity <= 1e-6, "S_OF(pi/2) = V sqrt(R_mean): worst rel diff " + num(worst_identity, 3));
  const double e_count = enhancement(gp, p, eta);
  o.check(e_count > best_of, "counting E " + num(e_count) + " > best threshold E " + num(best_of) + " (k=" +
                                 std::to_string(best_k) + ")");
  return o;
}

CalibrationDataset synthetic_calibration(double g_max, double eta, double noise, std::uint64_t seed) {
  CalibrationDataset d;
  d.power_mode = PowerMode::normalized;
  for (int i = 1; i <= 20; ++i) {
    const double power = i / 20.0;
    double counts = model_counts(gain_power_map(power, 1.0, g_max), eta);
    if (noise > 0.0) {
      CounterRng rng(seed, static_cast<std::uint64_t>(i));
      boost::random::normal_distribution<double> nd(0.0, 1.0);
      counts *= 1.0 + noise * nd(rng);
    }
    d.points.push_back({power, counts, 1.0});
  }
  return d;
}

Outcome criterion10() {
  Outcome o;
  const auto clean = fit_gain(synthetic_calibration(2.0, 0.1, 0.0, 0));
  o.check(rel(clean.g_max, 2.0) <= 1e-3 && rel(clean.eta_fit, 0.1) <= 1e-3,
          "noiseless: g_max = " + num(clean.g_max, 10) + ", eta = " + num(clean.eta_fit, 10));
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    try {
      const auto fit = fit_gain(synthetic_calibration(2.0, 0.1, 0.01, seed));
      if (rel(fit.g_max, 2.0) <= 0.05) ++within;
    } catch (const Error&) {
      // counted as a miss
    }
  }
  o.check(within >= 95, "1% noise: g_max within 5% in " + std::to_string(within) + "/100 runs");
  return o;
}

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// CSV file name -> bytes of one written archive.
std::vector<std::pair<std::string, std::string>> written_tables(const experiment::ResultArchive& a,
                                                                const fs::path& dir) {
  fs::remove_all(dir);
  a.write(dir.string());
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") out.emplace_back(entry.path().filename().string(), slurp(entry.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion11() {
  using experiment::ScenarioConfig;
  using experiment::ScenarioKind;
  using nlohmann::json;
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "qiopa_acceptance_11";
  const std::vector<std::pair<ScenarioKind, json>> scenarios = {
      {ScenarioKind::fringe, {{"physics", {{"phi_points", 8}}}, {"run", {{"trials", 20000}, {"batch_size", 1000}}}}},
      {ScenarioKind::enhancement_map, {{"options", {{"grid_points", 21}}}}},
      {ScenarioKind::of_tradeoff,
       {{"physics", {{"phi_points", 8}, {"k_grid", {0, 10, 20, 40}}}}, {"run", {{"trials", 20000}, {"batch_size", 1000}}}}},
      {ScenarioKind::fisher, {{"physics", {{"phi_points", 4}}}}},
      {ScenarioKind::calibrate, {{"options", {{"synthetic_noise", 0.01}}}}},
      {ScenarioKind::oracle_check, {{"options", {{"sampler_trials", 50000}}}, {"run", {{"batch_size", 1000}}}}},
  };
  for (const auto& [kind, j] : scenarios) {
    auto config = ScenarioConfig::from_json(j, kind);
    const std::string name = experiment::to_string(kind);
    config.run.workers = 1;
    const auto a = written_tables(experiment::run_scenario(config).archive, root / (name + "_a"));
    const auto b = written_tables(experiment::run_scenario(config).archive, root / (name + "_b"));
    config.run.workers = 3;
    const auto c = written_tables(experiment::run_scenario(config).archive, root / (name + "_c"));
    o.check(!a.empty() && a == b, name + ": rerun with 1 worker reproduces " + std::to_string(a.size()) + " CSV files");
    o.check(a == c, name + ": 3 workers give identical CSV files");
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qiopa acceptance criteria"};
  std::vector<int> selected;
  bool verbose = false;
  app.add_option("-c,--criterion", selected, "criterion number (repeatable); default all")->check(CLI::Range(1, 11));
  app.add_flag("-v,--verbose", verbose, "print every individual check");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"closed-form point check", criterion1},
      {"no-gain collapse", criterion2},
      {"saturation and critical injection", criterion3},
      {"moment propagation matches closed form", criterion4},
      {"oracle equivalence", criterion5},
      {"sampler correctness", criterion6},
      {"visibility law", criterion7},
      {"Cramer-Rao saturation", criterion8},
      {"threshold tradeoff", criterion9},
      {"calibration round trip", criterion10},
      {"determinism", criterion11},
  };
  if (selected.empty()) {
    for (int i = 1; i <= 11; ++i) selected.push_back(i);
  }
  bool all = true;
  for (int n : selected) {
    const auto& [title, run] = criteria[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && out.pass;
    for (const auto& note : out.notes) {
      if (verbose || !out.pass || note.rfind("ok", 0) != 0) std::cout << "    " << note << "\n";
    }
    std::printf("criterion %2d: %s  %s (%.1f s)\n", n, out.pass ? "PASS" : "FAIL", title, secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
