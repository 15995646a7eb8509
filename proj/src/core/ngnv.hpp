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

#include <cstddef>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace pann {

/// Noise generator for negative values with large magnitude.
struct NgnvConfig {
  bool enabled = false;
  double r = 0.3;          // fraction of negative pre-activations perturbed
  double lambda = 0.05;    // noise scale
  bool fixed_sign = false; // lambda*sgn(eps) instead of lambda*eps

  void validate() const;
  bool active() const noexcept { return enabled && r > 0.0; }
};

/// One perturbed element: delta = factor * z[index], factor = lambda*eps
/// (Gaussian) or lambda*sgn(eps) (fixed sign).
struct NgnvDraw {
  std::size_t index;
  double factor;
};

/// Number of negatives to perturb: r * count rounded half up, which never
/// exceeds ceil(r * count).
std::size_t ngnv_count(std::size_t negatives, double r);

/// Picks the most negative round(r * #negatives) entries of the whole tensor
/// and draws one noise value per selected entry, in index order.
std::vector<NgnvDraw> ngnv_draw(const Tensor& z, const NgnvConfig& cfg, Rng& rng);

/// z + delta on the selected entries; every other entry is bit-identical.
Tensor ngnv_perturb(const Tensor& z, const NgnvConfig& cfg, Rng& rng);

}  // namespace pann
