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

namespace pann {

/// Two's-complement fixed-point layout with l_x total bits. By default the
/// upper half are integer bits and the lower half fractional bits.
struct FixedPointFormat {
  int total_bits = 16;
  int frac_bits = 8;

  static FixedPointFormat half_split(int total_bits);

  std::int64_t min_raw() const noexcept { return -(std::int64_t{1} << (total_bits - 1)); }
  std::int64_t max_raw() const noexcept { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  double resolution() const noexcept;
  void validate() const;
};

struct FixedValue {
  std::int64_t raw = 0;
  FixedPointFormat format;

  double value() const noexcept;
  /// The l_x-bit complement code as an unsigned integer.
  std::uint64_t code() const noexcept;
};

/// raw = floor(x * 2^frac) saturated to the representable range. `saturated`
/// is set when clamping happened.
FixedValue quantize(double x, const FixedPointFormat& fmt, bool* saturated = nullptr);

enum class SignResult { kNonNegative, kNegative };

/// The l_x logical right-shift truncations (shift 0 .. l_x-1) of the
/// complement code.
std::vector<std::uint64_t> truncation_shares(const FixedValue& v);

/// Sign by the truncation protocol: non-negative iff a zero share appears.
/// Cross-checks against the sign bit and throws kInternal on disagreement.
SignResult truncation_sign(const FixedValue& v);

}  // namespace pann
