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

#include "core/fixed_point.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace pann {

FixedPointFormat FixedPointFormat::half_split(int total_bits) {
  FixedPointFormat f{total_bits, total_bits / 2};
  f.validate();
  return f;
}

double FixedPointFormat::resolution() const noexcept { return std::ldexp(1.0, -frac_bits); }

void FixedPointFormat::validate() const {
  require(total_bits >= 4 && total_bits <= 32 && total_bits % 2 == 0, ErrorCode::kInvalidArgument,
          "fixed point: l_x must be even and within [4, 32], got " + std::to_string(total_bits));
  require(frac_bits >= 0 && frac_bits < total_bits, ErrorCode::kInvalidArgument,
          "fixed point: fractional bits out of range");
}

double FixedValue::value() const noexcept {
  return std::ldexp(static_cast<double>(raw), -format.frac_bits);
}

std::uint64_t FixedValue::code() const noexcept {
  const std::uint64_t mask = (std::uint64_t{1} << format.total_bits) - 1;
  return static_cast<std::uint64_t>(raw) & mask;
}

FixedValue quantize(double x, const FixedPointFormat& fmt, bool* saturated) {
  const double scaled = std::floor(std::ldexp(x, fmt.frac_bits));
  const auto lo = static_cast<double>(fmt.min_raw());
  const auto hi = static_cast<double>(fmt.max_raw());
  bool sat = false;
  std::int64_t raw;
  if (std::isnan(scaled)) {
    raw = 0;
    sat = true;
  } else if (scaled < lo) {
    raw = fmt.min_raw();
    sat = true;
  } else if (scaled > hi) {
    raw = fmt.max_raw();
    sat = true;
  } else {
    raw = static_cast<std::int64_t>(scaled);
  }
  if (saturated) *saturated = sat;
  return {raw, fmt};
}

std::vector<std::uint64_t> truncation_shares(const FixedValue& v) {
  const std::uint64_t code = v.code();
  std::vector<std::uint64_t> shares(static_cast<std::size_t>(v.format.total_bits));
  for (int i = 0; i < v.format.total_bits; ++i) shares[static_cast<std::size_t>(i)] = code >> i;
  return shares;
}

SignResult truncation_sign(const FixedValue& v) {
  const std::uint64_t code = v.code();
  bool zero_seen = false;
  for (int i = 0; i < v.format.total_bits && !zero_seen; ++i) zero_seen = (code >> i) == 0;
  const bool sign_bit = (v.code() >> (v.format.total_bits - 1)) & 1u;
  if (zero_seen == sign_bit) {
    fail(ErrorCode::kInternal,
         "truncation sign disagrees with the sign bit for raw " + std::to_string(v.raw));
  }
  return zero_seen ? SignResult::kNonNegative : SignResult::kNegative;
}

}  // namespace pann
