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
#include <memory>
#include <variant>

#include <json.hpp>

#include "core/appsgn.hpp"
#include "core/fixed_point.hpp"
#include "core/ngnv.hpp"
#include "core/polynomial.hpp"
#include "core/tensor.hpp"

namespace pann {

struct ExactRelu {};

struct CompositeMode {
  std::shared_ptr<const CompositeSgnApprox> approx;
  OverflowPolicy overflow = OverflowPolicy::kClampToB;
};

struct InjectedMode {
  int beta = 8;
  SignFilter filter = SignFilter::kAll;
  InjectionKind kind = InjectionKind::kUniformRandom;
  std::uint64_t seed = 0;
  bool negate = false;  // uses -e, the antithetic partner of the same draw
};

/// sigma(z) = c * ReLU(z) + (1 - c) * p(z).
struct PartialReplaceMode {
  Polynomial poly;
  double c = 1.0;
  bool binarized = false;
};

struct TruncatedMode {
  FixedPointFormat format;
};

using ActivationMode =
    std::variant<ExactRelu, CompositeMode, InjectedMode, PartialReplaceMode, TruncatedMode>;

struct ActivationStats {
  std::size_t total = 0;
  std::size_t overflow = 0;   // |z| > B under a composite mode
  std::size_t saturated = 0;  // fixed-point saturation under truncated mode
  double max_abs = 0.0;

  void merge(const ActivationStats& o);
};

struct ActivationContext {
  std::size_t slot = 0;
  // Index of the first sample of this batch in the evaluation stream; keys
  // the injected-error counters so batching does not change the noise.
  std::uint64_t sample_offset = 0;
  const NgnvConfig* ngnv = nullptr;
  Rng* ngnv_rng = nullptr;
  ActivationStats* stats = nullptr;
};

/// Applies the activation elementwise. When `slope` is non-null it receives
/// dy/dz; ReLU's subgradient at exactly 0 is 0. NGNV, when configured,
/// adds delta = lambda * s * z to y on the selected negatives (ReLU output
/// side) and lambda * s to the slope.
void apply_activation(const ActivationMode& mode, const Tensor& z, Tensor& y, Tensor* slope,
                      const ActivationContext& ctx);

const char* mode_name(const ActivationMode& mode);
nlohmann::json to_json(const ActivationMode& mode);
ActivationMode activation_from_json(const nlohmann::json& j);

}  // namespace pann
