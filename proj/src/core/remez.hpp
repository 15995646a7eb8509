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
#include <vector>

#include "core/error.hpp"
#include "core/polynomial.hpp"

namespace pann {

enum class RemezBasis {
  kFull,  // 1, z, ..., z^d
  kOdd,   // z, z^3, ..., z^d  (d odd)
};

struct RemezOptions {
  RemezBasis basis = RemezBasis::kFull;
  /// Relative equioscillation tolerance: stop once the spread between the
  /// largest and smallest reference error is within tol * max_error.
  double tol = 1e-10;
  int max_iterations = 100;
  /// Error-search grid size; 0 picks a size from the degree.
  std::size_t search_points = 0;
};

struct RemezResult {
  Polynomial poly;
  double max_error = 0.0;
  std::vector<double> reference;  // final alternation points
  int iterations = 0;
  /// Sign-alternating extrema within tol of max_error.
  std::size_t alternations = 0;
  /// Number of free coefficients; equioscillation needs basis_size + 1 points.
  std::size_t basis_size = 0;
};

class RemezNonConvergence : public Error {
 public:
  RemezNonConvergence(const std::string& what, RemezResult last)
      : Error(ErrorCode::kNonConvergence, what), last_(std::move(last)) {}
  const RemezResult& last_iterate() const noexcept { return last_; }

 private:
  RemezResult last_;
};

using Target = std::function<double(double)>;

/// Best uniform polynomial approximation of target on [a, b] by Remez
/// exchange, initialised at Chebyshev extrema. Throws RemezNonConvergence
/// (carrying the last iterate) when the iteration cap is hit.
RemezResult remez_minimax(const Target& target, double a, double b, int degree,
                          const RemezOptions& options = {});

/// Counts sign-alternating local extrema of p - target on [a, b] whose
/// magnitude is at least (1 - tol) * level.
std::size_t count_alternations(const Polynomial& p, const Target& target, double a,
                               double b, double level, double tol,
                               std::size_t search_points = 20000);

/// Piecewise-linear interpolant through (x, y) samples, x strictly increasing.
class TabulatedFunction {
 public:
  TabulatedFunction(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;

 private:
  std::vector<double> x_, y_;
};

}  // namespace pann
