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

#include "core/ngnv.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace pann {

void NgnvConfig::validate() const {
  require(r >= 0.0 && r <= 1.0, ErrorCode::kInvalidArgument, "ngnv: r must lie in [0, 1]");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "ngnv: lambda must be finite and non-negative");
}

std::size_t ngnv_count(std::size_t negatives, double r) {
  const auto k = static_cast<std::size_t>(std::floor(r * static_cast<double>(negatives) + 0.5));
  return std::min(k, negatives);
}

std::vector<NgnvDraw> ngnv_draw(const Tensor& z, const NgnvConfig& cfg, Rng& rng) {
  std::vector<NgnvDraw> draws;
  if (!cfg.active()) return draws;
  std::vector<std::size_t> neg;
  const auto v = z.data();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] < 0.0) neg.push_back(i);
  const std::size_t k = ngnv_count(neg.size(), cfg.r);
  if (k == 0) return draws;
  // Most negative first; ties broken by index so selection is deterministic.
  auto more_negative = [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  };
  std::nth_element(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k - 1), neg.end(),
                   more_negative);
  neg.resize(k);
  std::sort(neg.begin(), neg.end());
  draws.reserve(k);
  for (std::size_t idx : neg) {
    const double eps = rng.normal();
    const double s = cfg.fixed_sign ? (eps < 0.0 ? -1.0 : 1.0) : eps;
    draws.push_back({idx, cfg.lambda * s});
  }
  return draws;
}

Tensor ngnv_perturb(const Tensor& z, const NgnvConfig& cfg, Rng& rng) {
  Tensor out = z;
  for (const auto& d : ngnv_draw(z, cfg, rng)) out[d.index] = z[d.index] + d.factor * z[d.index];
  return out;
}

}  // namespace pann
