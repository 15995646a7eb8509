// Copyright 2026 The Sturdy PANN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/probes.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "core/error.hpp"

namespace pann {

double ConvexProbe::delta(double x, double eps) const {
  return increment ? increment(x, eps) : h(x + eps) - h(x);
}

ConvexProbe quadratic_probe(double center, double scale) {
  ConvexProbe p;
  p.name = "quadratic(c=" + std::to_string(center) + ",s=" + std::to_string(scale) + ")";
  p.h = [=](double u) { return scale * (u - center) * (u - center); };
  p.right_derivative = [=](double u) { return 2.0 * scale * (u - center); };
  p.left_derivative = p.right_derivative;
  p.minimizer = center;
  p.a = std::max(center, 0.0);
  p.increment = [=](double x, double e) { return scale * e * (2.0 * (x - center) + e); };
  return p;
}

ConvexProbe kinked_probe(double kink) {
  require(kink < 0.0, ErrorCode::kInvalidArgument, "kinked probe: kink must be negative");
  ConvexProbe p;
  p.name = "kinked(k=" + std::to_string(kink) + ")";
  p.h = [=](double u) { return std::abs(u - kink) + u * u; };
  p.right_derivative = [=](double u) { return (u >= kink ? 1.0 : -1.0) + 2.0 * u; };
  p.left_derivative = [=](double u) { return (u > kink ? 1.0 : -1.0) + 2.0 * u; };
  // |u - k| + u^2 has its minimum at the kink when |2k| <= 1.
  p.minimizer = std::abs(2.0 * kink) <= 1.0 ? kink : -0.5;
  p.a = 0.0;
  p.increment = [=](double x, double e) {
    if (x >= kink && x + e >= kink) return e + e * (2.0 * x + e);
    return std::abs(x + e - kink) - std::abs(x - kink) + e * (2.0 * x + e);
  };
  return p;
}

ConvexProbe exp_probe(double a) {
  ConvexProbe p;
  p.name = "exp";
  p.h = [](double u) { return std::exp(u); };
  p.right_derivative = p.h;
  p.left_derivative = p.h;
  p.minimizer = -INFINITY;
  p.a = a;
  p.increment = [](double x, double e) { return std::exp(x) * std::expm1(e); };
  return p;
}

bool is_midpoint_convex(const ConvexProbe& p, double lo, double hi, std::size_t points) {
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 1; i + 1 < points; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double l = p.h(x - step), m = p.h(x), r = p.h(x + step);
    const double slack = 64.0 * DBL_EPSILON * (std::abs(l) + std::abs(m) + std::abs(r));
    if (2.0 * m > l + r + slack) return false;
  }
  return true;
}

const Theorem1Row& Theorem1Report::row_at(double eps) const {
  auto it = std::min_element(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    return std::abs(std::log(a.eps / eps)) < std::abs(std::log(b.eps / eps));
  });
  require(it != rows.end(), ErrorCode::kPrecondition, "theorem report has no rows");
  return *it;
}

Theorem1Report validate_theorem1(const ConvexProbe& neg, const ConvexProbe& pos,
                                 std::span<const double> eps, double ratio_tol, double min_slope) {
  require(!eps.empty(), ErrorCode::kInvalidArgument, "theorem check: empty eps sequence");
  require(neg.minimizer < 0.0, ErrorCode::kInvalidArgument,
          "theorem check: first probe must be minimized below zero");
  require(pos.minimizer > 0.0, ErrorCode::kInvalidArgument,
          "theorem check: second probe must be minimized above zero");
  for (const ConvexProbe* p : {&neg, &pos}) {
    const double c = std::isfinite(p->minimizer) ? p->minimizer : 0.0;
    if (!is_midpoint_convex(*p, c - 4.0, c + 4.0))
      fail(ErrorCode::kInvalidArgument, "theorem check: probe " + p->name + " is not convex");
  }

  Theorem1Report r;
  r.neg_probe = neg.name;
  r.pos_probe = pos.name;
  r.target = neg.right_derivative(0.0);
  r.ratio_tol = ratio_tol;
  r.min_slope = min_slope;
  std::vector<double> lx, ly;
  for (double e : eps) {
    require(e > 0.0, ErrorCode::kInvalidArgument, "theorem check: eps must be positive");
    Theorem1Row row;
    row.eps = e;
    row.dh_neg = neg.delta(0.0, e);
    row.dh_pos = pos.delta(pos.minimizer, e);
    row.ratio = (row.dh_neg - row.dh_pos) / e;
    row.error = std::abs(row.ratio - r.target);
    const double floor =
        64.0 * DBL_EPSILON * ((std::abs(row.dh_neg) + std::abs(row.dh_pos)) / e + std::abs(r.target));
    if (row.error > floor) {
      lx.push_back(std::log(e));
      ly.push_back(std::log(row.error));
    }
    r.rows.push_back(row);
  }
  if (lx.size() < 2) {
    r.exact = true;
    r.slope = INFINITY;
  } else {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  const auto smallest = std::min_element(r.rows.begin(), r.rows.end(),
                                         [](const auto& a, const auto& b) { return a.eps < b.eps; });
  r.pass = smallest->error <= ratio_tol && (r.exact || r.slope >= min_slope);
  return r;
}

LemmaReport validate_lemma_bound(const ConvexProbe& probe, std::span<const double> eps) {
  LemmaReport r;
  r.probe = probe.name;
  const double slope = probe.right_derivative(probe.a);
  for (double e : eps) {
    require(e > 0.0, ErrorCode::kInvalidArgument, "lemma check: eps must be positive");
    LemmaRow row{e, e * slope, probe.delta(probe.a, e), false};
    row.holds = row.lhs <= row.rhs;
    r.violations += row.holds ? 0 : 1;
    r.rows.push_back(row);
  }
  r.pass = r.violations == 0;
  return r;
}

double gradient_norm_bound(const GradientBoundParams& p, double lambda) {
  require(lambda >= 0.0 && p.step_constant > 0.0, ErrorCode::kInvalidArgument,
          "gradient bound: lambda must be >= 0 and C > 0");
  const double c1 = (p.initial_loss + 0.5 * lambda * p.initial_norm * p.initial_norm -
                     p.optimal_loss) /
                    p.step_constant;
  const double g = p.gradient_bound + lambda * p.max_norm;
  const double c2 = p.step_constant * (p.smoothness + lambda) * (g * g + p.noise_variance);
  return (c1 + c2) / std::sqrt(static_cast<double>(p.iterations) + 1.0);
}

MonotonicityReport check_gradient_bound_monotone(const GradientBoundParams& p,
                                                 std::span<const double> lambdas) {
  MonotonicityReport r;
  r.lambdas.assign(lambdas.begin(), lambdas.end());
  std::sort(r.lambdas.begin(), r.lambdas.end());
  r.monotone = true;
  for (double l : r.lambdas) {
    r.bounds.push_back(gradient_norm_bound(p, l));
    if (r.bounds.size() > 1 && r.bounds.back() < r.bounds[r.bounds.size() - 2]) r.monotone = false;
  }
  return r;
}

std::vector<double> log_space_desc(double hi, double lo, std::size_t count) {
  require(hi > 0.0 && lo > 0.0 && count >= 2, ErrorCode::kInvalidArgument,
          "log_space_desc: need positive bounds and at least two points");
  std::vector<double> out(count);
  const double a = std::log10(hi), b = std::log10(lo);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

nlohmann::json to_json(const Theorem1Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"eps", row.eps},
                    {"dh_neg", row.dh_neg},
                    {"dh_pos", row.dh_pos},
                    {"ratio", row.ratio},
                    {"error", row.error}});
  }
  return {{"neg_probe", r.neg_probe},
          {"pos_probe", r.pos_probe},
          {"target", r.target},
          {"slope", r.exact ? nlohmann::json("exact") : nlohmann::json(r.slope)},
          {"exact", r.exact},
          {"pass", r.pass},
          {"rows", rows}};
}

nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"eps", row.eps}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"holds", row.holds}});
  return {{"probe", r.probe}, {"violations", r.violations}, {"pass", r.pass}, {"rows", rows}};
}

nlohmann::json to_json(const MonotonicityReport& r) {
  return {{"lambdas", r.lambdas}, {"bounds", r.bounds}, {"monotone", r.monotone}};
}

nlohmann::json run_theorem_suite() {
  nlohmann::json report;
  bool pass = true;
  const auto eps = log_space_desc(1e-1, 1e-6, 11);
  nlohmann::json theorem = nlohmann::json::array();
  const std::pair<ConvexProbe, ConvexProbe> pairs[] = {
      {quadratic_probe(-1.0), quadratic_probe(1.0)},
      {quadratic_probe(-1.0), quadratic_probe(1.0, 2.0)},
      {kinked_probe(-0.5), quadratic_probe(1.0)},
  };
  for (const auto& [n, p] : pairs) {
    const auto r = validate_theorem1(n, p, eps);
    pass = pass && r.pass;
    theorem.push_back(to_json(r));
  }
  report["theorem1"] = theorem;

  nlohmann::json lemma = nlohmann::json::array();
  const auto lemma_eps = log_space_desc(1.0, 1e-6, 50);
  for (const auto& probe : {quadratic_probe(1.0), quadratic_probe(-1.0), exp_probe(0.0)}) {
    const auto r = validate_lemma_bound(probe, lemma_eps);
    pass = pass && r.pass;
    lemma.push_back(to_json(r));
  }
  report["lemma"] = lemma;

  const double lambdas[] = {0.0, 1e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 1e-1};
  const auto mono = check_gradient_bound_monotone(GradientBoundParams{}, lambdas);
  pass = pass && mono.monotone;
  report["gradient_bound"] = to_json(mono);
  report["pass"] = pass;
  return report;
}

}  // namespace pann
