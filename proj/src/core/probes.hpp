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

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pann {

/// One-dimensional convex loss slice h with its one-sided derivatives. `a` is
/// the point where increments are taken, ReLU(minimizer) for the standard
/// probes.
struct ConvexProbe {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> right_derivative;
  std::function<double(double)> left_derivative;
  double minimizer = 0.0;
  double a = 0.0;
  /// Optional closed form of h(x + eps) - h(x) free of cancellation.
  std::function<double(double, double)> increment;

  double delta(double x, double eps) const;
};

/// s * (u - c)^2, minimized at c.
ConvexProbe quadratic_probe(double center, double scale = 1.0);
/// |u - k| + u^2 with k < 0: kink and minimizer at k, right derivative 1 at 0.
ConvexProbe kinked_probe(double kink = -0.5);
/// e^u evaluated at `a` (no minimizer).
ConvexProbe exp_probe(double a = 0.0);

/// Midpoint convexity test on a uniform grid over [lo, hi].
bool is_midpoint_convex(const ConvexProbe& p, double lo, double hi, std::size_t points = 2001);

struct Theorem1Row {
  double eps = 0.0;
  double dh_neg = 0.0;  // h1(eps) - h1(0)
  double dh_pos = 0.0;  // h2(zbar2 + eps) - h2(zbar2)
  double ratio = 0.0;   // (dh_neg - dh_pos) / eps
  double error = 0.0;   // |ratio - h1'_+(0)|
};

struct Theorem1Report {
  std::string neg_probe;
  std::string pos_probe;
  double target = 0.0;
  std::vector<Theorem1Row> rows;
  /// Least-squares slope of log(error) against log(eps) over rows above the
  /// rounding floor. `exact` is set when every error sits on that floor.
  double slope = 0.0;
  bool exact = false;
  double ratio_tol = 1e-3;
  double min_slope = 0.9;
  bool pass = false;

  const Theorem1Row& row_at(double eps) const;
};

/// Difference of loss increments for a dead unit (minimizer < 0, taken at
/// ReLU = 0) and a live unit (minimizer > 0) under the same error eps. Passes
/// when the error at the smallest eps is within ratio_tol and the convergence
/// order is at least min_slope (or exact). Throws kInvalidArgument on probes
/// that fail the convexity test or sit on the wrong side of zero.
Theorem1Report validate_theorem1(const ConvexProbe& neg, const ConvexProbe& pos,
                                 std::span<const double> eps, double ratio_tol = 1e-3,
                                 double min_slope = 0.9);

struct LemmaRow {
  double eps = 0.0;
  double lhs = 0.0;  // eps * h'_+(a)
  double rhs = 0.0;  // h(a + eps) - h(a)
  bool holds = false;
};

struct LemmaReport {
  std::string probe;
  std::vector<LemmaRow> rows;
  std::size_t violations = 0;
  bool pass = false;
};

/// eps * h'_+(a) <= h(a + eps) - h(a) for every eps > 0, checked with no
/// tolerance.
LemmaReport validate_lemma_bound(const ConvexProbe& probe, std::span<const double> eps);

/// Constants of the weight-decayed SGD convergence bound.
struct GradientBoundParams {
  double initial_loss = 2.3;
  double optimal_loss = 0.0;
  double initial_norm = 10.0;  // ||theta_0||
  double max_norm = 20.0;      // max ||theta|| along the run
  double smoothness = 1.0;
  double gradient_bound = 1.0;
  double noise_variance = 1.0;
  double step_constant = 0.1;  // C in eta <= C / sqrt(t + 1)
  std::size_t iterations = 1000;
};

/// Upper bound on min_k E||grad f(theta_k)||^2 for f = L + (lambda/2)||theta||^2.
double gradient_norm_bound(const GradientBoundParams& p, double lambda);

struct MonotonicityReport {
  std::vector<double> lambdas;
  std::vector<double> bounds;
  bool monotone = false;
};

MonotonicityReport check_gradient_bound_monotone(const GradientBoundParams& p,
                                                 std::span<const double> lambdas);

/// `count` log-spaced values from hi down to lo.
std::vector<double> log_space_desc(double hi, double lo, std::size_t count);

nlohmann::json to_json(const Theorem1Report& r);
nlohmann::json to_json(const LemmaReport& r);
nlohmann::json to_json(const MonotonicityReport& r);

/// Default suite: three theorem pairs, three lemma probes x 50 eps values and
/// the weight-decay monotonicity check. report["pass"] summarizes.
nlohmann::json run_theorem_suite();

}  // namespace pann
