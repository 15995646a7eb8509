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

#include <doctest.h>

#include <cmath>

#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/fixed_point.hpp"
#include "core/lab.hpp"
#include "core/network.hpp"
#include "core/training.hpp"
#include "core/transform.hpp"

using namespace pann;

TEST_CASE("quantize examples in the 4.4 format") {
  const auto fmt = FixedPointFormat::half_split(8);
  CHECK(fmt.frac_bits == 4);
  const auto a = quantize(2.5, fmt);
  CHECK(a.raw == 40);
  CHECK(a.code() == 0b00101000);
  CHECK(a.value() == 2.5);
  CHECK(quantize(2.53, fmt).raw == 40);
  const auto n = quantize(-1.25, fmt);
  CHECK(n.raw == -20);
  CHECK(n.code() == 0b11101100);
}

TEST_CASE("quantize saturates and reports it") {
  const auto fmt = FixedPointFormat::half_split(8);
  bool sat = false;
  CHECK(quantize(100.0, fmt, &sat).raw == 127);
  CHECK(sat);
  CHECK(quantize(-100.0, fmt, &sat).raw == -128);
  CHECK(sat);
  quantize(1.0, fmt, &sat);
  CHECK_FALSE(sat);
}

TEST_CASE("format validation") {
  CHECK_THROWS_AS(FixedPointFormat::half_split(7), Error);
  CHECK_THROWS_AS(FixedPointFormat::half_split(2), Error);
  CHECK_THROWS_AS(FixedPointFormat::half_split(34), Error);
}

TEST_CASE("quantization error is below one resolution step in range") {
  for (int lx = 4; lx <= 32; lx += 2) {
    const auto fmt = FixedPointFormat::half_split(lx);
    const double top = std::ldexp(static_cast<double>(fmt.max_raw()), -fmt.frac_bits);
    const double bottom = std::ldexp(static_cast<double>(fmt.min_raw()), -fmt.frac_bits);
    for (int i = 0; i <= 1000; ++i) {
      const double x = bottom + (top - bottom) * i / 1000.0;
      const double err = std::abs(quantize(x, fmt).value() - x);
      CHECK(err < fmt.resolution());
    }
  }
}

TEST_CASE("truncation sign examples") {
  const auto fmt = FixedPointFormat::half_split(8);
  const FixedValue v{0b00001010, fmt};
  CHECK(truncation_shares(v)[4] == 0);
  CHECK(truncation_sign(v) == SignResult::kNonNegative);
  const FixedValue zero{0, fmt};
  CHECK(truncation_shares(zero)[0] == 0);
  CHECK(truncation_sign(zero) == SignResult::kNonNegative);
  std::size_t negatives = 0;
  for (std::int64_t raw = -128; raw < 0; ++raw) {
    const FixedValue n{raw, fmt};
    for (auto s : truncation_shares(n)) CHECK(s != 0);
    if (truncation_sign(n) == SignResult::kNegative) ++negatives;
  }
  CHECK(negatives == 128);
}

TEST_CASE("truncation sign matches the sign bit for every raw up to 16 bits") {
  for (int lx = 4; lx <= 16; lx += 2) {
    const auto fmt = FixedPointFormat::half_split(lx);
    std::size_t mismatches = 0;
    for (std::int64_t raw = fmt.min_raw(); raw <= fmt.max_raw(); ++raw) {
      const bool negative = truncation_sign(FixedValue{raw, fmt}) == SignResult::kNegative;
      if (negative != (raw < 0)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("grid-exact pre-activations give backbone-identical outputs") {
  // Integer weights and quarter-step inputs keep every pre-activation on the
  // 8.8 grid and within range.
  std::vector<Layer> layers{Dense{Tensor({3, 2}, {1, -2, 3, 1, -1, -1}), Tensor({3}, {0.25, 0, -0.5})},
                            ActivationLayer{ExactRelu{}},
                            Dense{Tensor({2, 3}, {1, 2, -1, -1, 1, 2}), Tensor({2})}};
  const Network net({2}, 2, std::move(layers));
  Dataset eval{Tensor({64, 2}), std::vector<int>(64), 2};
  for (std::size_t i = 0; i < 128; ++i) eval.x[i] = 0.25 * (static_cast<double>(i % 17) - 8.0);
  eval.labels = predict_labels(net, eval.x);
  const auto t = transform(net, TruncatedMode{FixedPointFormat::half_split(16)}, IntervalPolicy{});
  CHECK(predict(t, eval.x) == predict(net, eval.x));
  CHECK(truncated_relu_network_eval(net, eval, FixedPointFormat::half_split(16)).accuracy == 1.0);
}

TEST_CASE("32-bit truncation tracks the exact backbone") {
  const auto split = load_dataset(dataset_spec_from_json(
      {{"source", "synthetic_blobs"}, {"n", 2000}, {"classes", 3}, {"dim", 4}, {"seed", 12}}));
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  cfg.lr.base = 0.05;
  const auto net =
      train(build_network({{"type", "mlp"}, {"hidden", {32, 32}}}, {4}, 3, 12), split.train, nullptr, cfg)
          .net;
  const auto fmt = FixedPointFormat::half_split(32);
  const auto exact = evaluate(net, split.test.x, split.test.labels);
  const auto trunc = truncated_relu_network_eval(net, split.test, fmt);
  CHECK(std::abs(exact.accuracy - trunc.accuracy) <= 0.001);
  const auto a = predict_labels(net, split.test.x);
  const auto b = predict_labels(transform(net, TruncatedMode{fmt}, IntervalPolicy{}), split.test.x);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  CHECK(static_cast<double>(same) >= 0.999 * static_cast<double>(a.size()));
}

TEST_CASE("saturation is counted during truncated evaluation") {
  std::vector<Layer> layers{Dense{Tensor({2, 1}, {100, -100}), Tensor({2})},
                            ActivationLayer{ExactRelu{}},
                            Dense{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})}};
  const Network net({1}, 2, std::move(layers));
  const Dataset eval{Tensor({2, 1}, {1.0, -1.0}), {0, 1}, 2};
  const auto r = truncated_relu_network_eval(net, eval, FixedPointFormat::half_split(8));
  CHECK(r.stats.saturated == 4);
}
