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

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "core/polynomial.hpp"
#include "core/tensor.hpp"

namespace pann {

struct PrecisionCertificate {
  int beta = 0;
  std::size_t grid_size = 0;  // points per branch
  double max_error = 0.0;
  double argmax = 0.0;  // in the original (unscaled) input units
  bool pass = false;

  double bound() const;
};

struct AppsgnOptions {
  std::vector<int> stage_degrees{7, 15};
  int max_stages = 32;
  std::size_t grid_points = 100000;
  // Stages stop once the predicted error is below margin * 2^-beta, leaving
  // headroom for the grid certification and the final Horner rounding.
  double margin = 0.9;
  // Blend the finishing stage with the identity, p_t(u) = (1 - t) u + t p(u),
  // at the smallest t that still meets the target, so the certified error sits
  // near 2^-beta rather than far below it and beta tracks the real precision.
  bool tight = true;
};

/// Odd composite polynomial p_k o ... o p_1 approximating sgn(z) on
/// [-B, -eps0] U [eps0, B] after scaling z by 1/B. Instances only exist with a
/// passing certificate.
class CompositeSgnApprox {
 public:
  /// Staged minimax construction. Throws kInfeasible when the stage cap is
  /// reached before the precision is certified.
  static CompositeSgnApprox build(int beta, double eps0, double bound, int max_stage_degree,
                                  const AppsgnOptions& options = {});

  /// Wraps an explicit chain after certifying it; throws kNotCertified.
  static CompositeSgnApprox from_chain(std::vector<Polynomial> chain, int beta, double eps0,
                                       double bound, std::size_t grid_points = 100000);

  const std::vector<Polynomial>& chain() const noexcept { return chain_; }
  int beta() const noexcept { return beta_; }
  double eps0() const noexcept { return eps0_; }
  double bound() const noexcept { return bound_; }
  const PrecisionCertificate& certificate() const noexcept { return cert_; }

  /// Appsgn(z) with no clamping; callers decide what happens beyond B.
  double sgn(double z) const noexcept;
  /// Appsgn(z) and d/dz Appsgn(z).
  void sgn_with_derivative(double z, double& value, double& slope) const noexcept;

  /// Total multiplicative depth, sum of ceil(log2(deg + 1)) over stages.
  int depth() const noexcept;

 private:
  CompositeSgnApprox() = default;

  std::vector<Polynomial> chain_;
  int beta_ = 0;
  double eps0_ = 0.0;
  double bound_ = 1.0;
  PrecisionCertificate cert_;
};

/// Grid certification of a chain on the scaled branches [-1,-eps]U[eps,1]
/// (eps = eps0 / B): `grid_points` uniform points per branch, then Chebyshev
/// node refinement around the largest grid extrema.
PrecisionCertificate certify_chain(const std::vector<Polynomial>& chain, int beta, double eps0,
                                   double bound, std::size_t grid_points);

PrecisionCertificate certify(const CompositeSgnApprox& approx, std::size_t grid_points);

enum class OverflowPolicy { kClampToB, kWidenAndRecertify, kError };

struct IntervalPolicy {
  double bound = 1.0;
  OverflowPolicy overflow = OverflowPolicy::kClampToB;
};

/// AppReLU(z) = (z + z * Appsgn(z)) / 2, with Appsgn evaluated at z clamped
/// to [-B, B].
double app_relu(double z, const CompositeSgnApprox& approx);
Tensor app_relu(const Tensor& z, const CompositeSgnApprox& approx);

enum class SignFilter { kAll, kNegOnly, kPosOnly };
enum class InjectionKind { kUniformRandom, kWorstCaseFixed };

bool admits(SignFilter filter, double z) noexcept;

/// Relative sgn error e for element `counter`, |e| <= 2^-beta. Stateless in
/// (seed, counter) so repeated evaluation of the same input sees the same error.
double injected_sgn_error(int beta, InjectionKind kind, std::uint64_t seed,
                          std::uint64_t counter) noexcept;

/// ReLU(z) + e*z/2 on elements whose sign passes the filter, exact ReLU
/// elsewhere.
Tensor error_injection_relu(const Tensor& z, int beta, SignFilter filter, InjectionKind kind,
                            std::uint64_t seed);

nlohmann::json to_json(const CompositeSgnApprox& approx);
/// Rebuilds and re-certifies; rejects files whose chain no longer certifies.
CompositeSgnApprox approx_from_json(const nlohmann::json& j);

const char* to_string(SignFilter f);
const char* to_string(InjectionKind k);
const char* to_string(OverflowPolicy p);
SignFilter parse_sign_filter(const std::string& s);
InjectionKind parse_injection_kind(const std::string& s);
OverflowPolicy parse_overflow_policy(const std::string& s);

}  // namespace pann
