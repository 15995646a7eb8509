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

#include <optional>
#include <vector>

#include "core/network.hpp"

namespace pann {

struct TransformOptions {
  /// Slots to rewrite; empty selects every activation slot.
  std::vector<bool> mask;
  /// Per-slot mixing coefficients for PartialReplace; empty keeps the mode's c.
  std::vector<double> partial_c;
  /// Largest |z| seen on calibration data. Under widen_and_recertify a
  /// composite approximant whose B is smaller gets rescaled to 1.2x this value.
  std::optional<double> calibration_max;
};

/// Largest |pre-activation| over every activation slot on `x`, evaluated on the
/// network as given.
double calibrate_max_preactivation(const Network& net, const Tensor& x,
                                   std::size_t batch_size = 256);

/// 1.2 * calibrate_max_preactivation, floored at a tiny positive value.
double calibrated_bound(const Network& net, const Tensor& x, std::size_t batch_size = 256);

/// Copy of `net` with the selected exact-ReLU slots carrying `mode`. Injected
/// slots get independent seeds derived from the mode seed and slot index.
/// Records the transform under metadata["pann"].
Network transform(const Network& net, const ActivationMode& mode, const IntervalPolicy& policy,
                  const TransformOptions& options = {});

/// Every activation slot back to exact ReLU; metadata["pann"] removed.
Network restore_backbone(const Network& net);

/// Composite mode with eps0 = 2^-beta * B.
CompositeMode make_composite_mode(int beta, double bound,
                                  OverflowPolicy overflow = OverflowPolicy::kClampToB,
                                  int max_stage_degree = 15);

/// (1-c)(g-p) when the slot binarizes to g, c(p-g) when it binarizes to p.
double replacement_error(double g_val, double p_val, double c, bool binarized_to_g);

/// 0.14 z^2 + 0.5 z + 0.28.
Polynomial default_quadratic_replacement();

}  // namespace pann
