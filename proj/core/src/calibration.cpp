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

#include "qiopa/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qiopa/csv.hpp"
#include "qiopa/error.hpp"

namespace qiopa {

namespace {

using Vec2 = std::array<double, 2>;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

class Objective {
 public:
  explicit Objective(const CalibrationDataset& data) : pts_(data.sorted()), p_max_(data.p_max()) {
    for (const auto& pt : pts_) {
      double w = 1.0;
      if (data.weight_mode == WeightMode::poisson) {
        w = 1.0 / std::max(pt.counts, 1.0);
      } else if (data.weight_mode == WeightMode::explicit_weights) {
        w = pt.weight;
      }
      w_.push_back(w);
    }
  }

  // Weighted residual sum of squares at (g_max, eta).
  double operator()(double g_max, double eta) {
    ++evaluations;
    double s = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double r = pts_[i].counts - model_counts(gain_power_map(pts_[i].power, p_max_, g_max), eta);
      s += w_[i] * r * r;
    }
    return s;
  }

  double at(const Vec2& x) { return (*this)(std::exp(x[0]), logistic(x[1])); }
  std::size_t size() const { return pts_.size(); }

  int evaluations = 0;

 private:
  std::vector<CalibrationPoint> pts_;
  std::vector<double> w_;
  double p_max_;
};

struct SimplexResult {
  Vec2 x{};
  double f = 0.0;
  bool converged = false;
};

SimplexResult nelder_mead(Objective& obj, Vec2 start, const FitOptions& opt) {
  std::array<Vec2, 3> v = {start, start, start};
  v[1][0] += 0.3;
  v[2][1] += 0.3;
  std::array<double, 3> f = {obj.at(v[0]), obj.at(v[1]), obj.at(v[2])};
  auto order = [&] {
    std::array<int, 3> idx = {0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
    const auto v0 = v;
    const auto f0 = f;
    for (int i = 0; i < 3; ++i) {
      v[i] = v0[idx[i]];
      f[i] = f0[idx[i]];
    }
  };
  SimplexResult out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    order();
    const double spread = f[2] - f[0];
    const double size = std::max({std::abs(v[1][0] - v[0][0]), std::abs(v[1][1] - v[0][1]),
                                  std::abs(v[2][0] - v[0][0]), std::abs(v[2][1] - v[0][1])});
    if (spread <= opt.tolerance * std::abs(f[0]) || size < 1e-12) {
      out.converged = true;
      break;
    }
    const Vec2 c = {(v[0][0] + v[1][0]) / 2.0, (v[0][1] + v[1][1]) / 2.0};
    auto along = [&](double t) { return Vec2{c[0] + t * (v[2][0] - c[0]), c[1] + t * (v[2][1] - c[1])}; };
    const Vec2 xr = along(-1.0);
    const double fr = obj.at(xr);
    if (fr < f[0]) {
      const Vec2 xe = along(-2.0);
      const double fe = obj.at(xe);
      if (fe < fr) {
        v[2] = xe;
        f[2] = fe;
      } else {
        v[2] = xr;
        f[2] = fr;
      }
    } else if (fr < f[1]) {
      v[2] = xr;
      f[2] = fr;
    } else {
      const bool outside = fr < f[2];
      const Vec2 xc = along(outside ? -0.5 : 0.5);
      const double fc = obj.at(xc);
      if (fc < (outside ? fr : f[2])) {
        v[2] = xc;
        f[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          v[i] = {v[0][0] + 0.5 * (v[i][0] - v[0][0]), v[0][1] + 0.5 * (v[i][1] - v[0][1])};
          f[i] = obj.at(v[i]);
        }
      }
    }
  }
  order();
  out.x = v[0];
  out.f = f[0];
  return out;
}

// Parabolic steps along each axis with a shrinking bracket.
void quadratic_polish(Objective& obj, Vec2& x, double& fx) {
  double h = 1e-2;
  for (int round = 0; round < 40 && h > 1e-10; ++round) {
    bool moved = false;
    for (int k = 0; k < 2; ++k) {
      Vec2 lo = x, hi = x;
      lo[k] -= h;
      hi[k] += h;
      const double fl = obj.at(lo), fh = obj.at(hi);
      const double curv = fl - 2.0 * fx + fh;
      if (curv > 0.0) {
        const double step = 0.5 * h * (fl - fh) / curv;
        if (std::abs(step) <= 2.0 * h) {
          Vec2 xn = x;
          xn[k] += step;
          const double fn = obj.at(xn);
          if (fn < fx) {
            x = xn;
            fx = fn;
            moved = true;
            continue;
          }
        }
      }
      if (fl < fx) {
        x = lo;
        fx = fl;
        moved = true;
      } else if (fh < fx) {
        x = hi;
        fx = fh;
        moved = true;
      }
    }
    if (!moved) h *= 0.25;
  }
}

// One-sigma half-widths in (g_max, eta) from the curvature at the optimum.
Vec2 half_widths(Objective& obj, double g, double eta, double f_opt) {
  const double hg = 1e-4 * g;
  const double he = 1e-4 * std::min(eta, 1.0 - eta > 0.0 ? 1.0 - eta : eta);
  if (!(he > 0.0)) {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  const double f0 = obj(g, eta);
  const double hgg = (obj(g + hg, eta) - 2.0 * f0 + obj(g - hg, eta)) / (hg * hg);
  const double hee = (obj(g, eta + he) - 2.0 * f0 + obj(g, eta - he)) / (he * he);
  const double hge = (obj(g + hg, eta + he) - obj(g + hg, eta - he) - obj(g - hg, eta + he) +
                      obj(g - hg, eta - he)) /
                     (4.0 * hg * he);
  const double det = hgg * hee - hge * hge;
  const double inf = std::numeric_limits<double>::infinity();
  if (!(det > 0.0) || !(hgg > 0.0)) return {inf, inf};
  const double dof = static_cast<double>(obj.size()) - 2.0;
  const double sigma2 = std::max(f_opt, 0.0) / dof;
  // Hessian of the sum of squares is twice the Gauss-Newton matrix.
  return {std::sqrt(2.0 * sigma2 * hee / det), std::sqrt(2.0 * sigma2 * hgg / det)};
}

}  // namespace

double model_counts(double g, double eta) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("gain g must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("transmission eta must be in (0, 1]");
  const double t = std::tanh(g);
  const double t2 = t * t;
  return eta * t2 / (1.0 - (1.0 - eta) * t2);
}

double gain_power_map(double power, double p_max, double g_max) {
  if (!(p_max > 0.0)) throw DomainError("P_max must be > 0");
  if (!(power >= 0.0 && power <= p_max)) throw DomainError("pump power must be in [0, P_max]");
  if (!(g_max >= 0.0)) throw DomainError("g_max must be >= 0");
  return g_max * std::sqrt(power / p_max);
}

const char* to_string(PowerMode m) { return m == PowerMode::raw ? "raw" : "normalized"; }

PowerMode power_mode_from_string(const std::string& s) {
  if (s == "raw") return PowerMode::raw;
  if (s == "normalized") return PowerMode::normalized;
  throw ParseError("unknown power mode '" + s + "'");
}

std::vector<CalibrationPoint> CalibrationDataset::sorted() const {
  auto pts = points;
  std::sort(pts.begin(), pts.end(),
            [](const CalibrationPoint& a, const CalibrationPoint& b) { return a.power < b.power; });
  return pts;
}

void CalibrationDataset::validate() const {
  if (points.size() < 4) throw DomainError("calibration needs at least 4 points");
  const auto pts = sorted();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (!std::isfinite(p.power) || p.power < 0.0) throw DomainError("pump powers must be >= 0");
    if (!std::isfinite(p.counts) || p.counts < 0.0) throw DomainError("counts must be >= 0");
    if (weight_mode == WeightMode::explicit_weights && !(p.weight > 0.0 && std::isfinite(p.weight))) {
      throw DomainError("explicit weights must be > 0");
    }
    if (i > 0 && !(p.power > pts[i - 1].power)) throw DomainError("pump powers must be distinct");
  }
  if (power_mode == PowerMode::normalized && pts.back().power > 1.0) {
    throw DomainError("normalized pump powers must be <= 1");
  }
}

double CalibrationDataset::p_max() const {
  if (power_mode == PowerMode::normalized) return 1.0;
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, p.power);
  return m;
}

CalibrationFit fit_gain(const CalibrationDataset& data, const FitOptions& options) {
  data.validate();
  if (!(data.p_max() > 0.0)) throw FitError("calibration: all pump powers are zero");
  double c_lo = data.points.front().counts, c_hi = c_lo;
  for (const auto& p : data.points) {
    c_lo = std::min(c_lo, p.counts);
    c_hi = std::max(c_hi, p.counts);
  }
  if (!(c_hi - c_lo > 1e-12 * c_hi)) {
    throw FitError("calibration: counts do not vary with power; gain is unidentifiable");
  }

  Objective obj(data);
  SimplexResult best;
  best.f = std::numeric_limits<double>::infinity();
  int converged = 0;
  constexpr int kGrid = 5;
  for (int i = 0; i < kGrid; ++i) {
    // g_max from 0.2 to 8, eta from 1e-3 to 0.9, both log-spaced.
    const double g0 = 0.2 * std::pow(40.0, i / (kGrid - 1.0));
    for (int j = 0; j < kGrid; ++j) {
      const double e0 = 1e-3 * std::pow(900.0, j / (kGrid - 1.0));
      const auto r = nelder_mead(obj, {std::log(g0), logit(e0)}, options);
      if (r.converged) ++converged;
      if (r.f < best.f) best = r;
    }
  }
  if (converged == 0 || !std::isfinite(best.f)) {
    std::ostringstream msg;
    msg << "calibration: no simplex start converged; best so far g_max=" << std::exp(best.x[0])
        << " eta=" << logistic(best.x[1]) << " rss=" << best.f;
    throw FitError(msg.str());
  }
  quadratic_polish(obj, best.x, best.f);

  CalibrationFit fit;
  fit.g_max = std::exp(best.x[0]);
  fit.eta_fit = logistic(best.x[1]);
  fit.residual_norm = std::sqrt(best.f);
  const auto hw = half_widths(obj, fit.g_max, fit.eta_fit, best.f);
  fit.g_max_halfwidth = hw[0];
  fit.eta_halfwidth = hw[1];
  fit.starts_converged = converged;
  fit.evaluations = obj.evaluations;
  return fit;
}

CalibrationDataset read_calibration_csv(std::istream& in, PowerMode mode) {
  const auto t = csv::read(in);
  CalibrationDataset data;
  data.power_mode = mode;
  if (const auto* m = t.meta("power_mode")) data.power_mode = power_mode_from_string(*m);
  const auto cp = t.column("power");
  const auto cc = t.column("counts");
  const bool weighted = t.has_column("weight");
  if (weighted) data.weight_mode = WeightMode::explicit_weights;
  for (const auto& row : t.rows) {
    CalibrationPoint p;
    p.power = csv::parse_double(row[cp]);
    p.counts = csv::parse_double(row[cc]);
    if (weighted) p.weight = csv::parse_double(row[t.column("weight")]);
    data.points.push_back(p);
  }
  return data;
}

void write_calibration_csv(std::ostream& out, const CalibrationDataset& data) {
  csv::Table t;
  t.metadata.emplace_back("power_mode", to_string(data.power_mode));
  const bool weighted = data.weight_mode == WeightMode::explicit_weights;
  t.header = {"power", "counts"};
  if (weighted) t.header.push_back("weight");
  for (const auto& p : data.points) {
    std::vector<std::string> row = {csv::format_double(p.power), csv::format_double(p.counts)};
    if (weighted) row.push_back(csv::format_double(p.weight));
    t.add_row(std::move(row));
  }
  csv::write(out, t);
}

std::string format_fit_report(const CalibrationFit& fit) {
  std::ostringstream s;
  s << "{\n"
    << "  \"g_max\": " << csv::format_double(fit.g_max) << ",\n"
    << "  \"g_max_halfwidth\": " << csv::format_double(fit.g_max_halfwidth) << ",\n"
    << "  \"eta_fit\": " << csv::format_double(fit.eta_fit) << ",\n"
    << "  \"eta_halfwidth\": " << csv::format_double(fit.eta_halfwidth) << ",\n"
    << "  \"residual_norm\": " << csv::format_double(fit.residual_norm) << ",\n"
    << "  \"starts_converged\": " << fit.starts_converged << ",\n"
    << "  \"evaluations\": " << fit.evaluations << "\n"
    << "}\n";
  return s.str();
}

}  // namespace qiopa
