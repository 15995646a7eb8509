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
#include "core/network.hpp"
#include "core/training.hpp"
#include "core/transform.hpp"

using namespace pann;

namespace {

struct Fixture {
  Network net;
  Dataset data;
};

const Fixture& trained_mlp() {
  static const Fixture f = [] {
    auto split = load_dataset(dataset_spec_from_json(
        {{"source", "synthetic_blobs"}, {"n", 600}, {"classes", 3}, {"dim", 4}, {"seed", 2}}));
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    cfg.lr.base = 0.05;
    auto net = build_network({{"type", "mlp"}, {"hidden", {16, 16}}}, {4}, 3, 2);
    return Fixture{train(std::move(net), split.train, nullptr, cfg).net, split.test};
  }();
  return f;
}

/// Straight-line bound on |logit drift|: every activation adds at most
/// 2^-beta * max(|z| / 2, B) and AppReLU is at most 2-Lipschitz on [-B, B].
std::vector<double> propagated_bound(const Network& net, const Tensor& x, int beta, double B) {
  const auto fwd = forward(net, x);
  const std::size_t n = x.dim(0);
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> e(net.input_shape()[0], 0.0);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const auto& layer = net.layers()[l];
      if (const auto* d = std::get_if<Dense>(&layer)) {
        const std::size_t o = d->weight.dim(0), in = d->weight.dim(1);
        std::vector<double> next(o, 0.0);
        for (std::size_t i = 0; i < o; ++i)
          for (std::size_t j = 0; j < in; ++j) next[i] += std::abs(d->weight[i * in + j]) * e[j];
        e = next;
      } else {
        const Tensor& z = fwd.trace.values[l];
        const std::size_t w = e.size();
        for (std::size_t i = 0; i < w; ++i) {
          const double zi = std::abs(z[s * w + i]) + e[i];
          e[i] = 2.0 * e[i] + std::ldexp(std::max(zi / 2.0, B), -beta);
        }
      }
    }
    out[s] = *std::max_element(e.begin(), e.end());
  }
  return out;
}

}  // namespace

TEST_CASE("exact ReLU transform is the identity") {
  const auto& f = trained_mlp();
  const auto t = transform(f.net, ExactRelu{}, IntervalPolicy{});
  CHECK(predict(t, f.data.x) == predict(f.net, f.data.x));
}

TEST_CASE("composite beta=12 logits stay within the propagated bound") {
  const auto& f = trained_mlp();
  const Tensor x = f.data.x.slice_rows(0, 100);
  const double B = calibrated_bound(f.net, x);
  const auto t = transform(f.net, make_composite_mode(12, B), IntervalPolicy{B});
  const auto a = predict(f.net, x);
  const auto b = predict(t, x);
  CHECK(b.all_finite());
  const auto bound = propagated_bound(f.net, x, 12, B);
  for (std::size_t s = 0; s < 100; ++s)
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(a[s * 3 + c] - b[s * 3 + c]) <= bound[s]);
}

TEST_CASE("logit drift shrinks as beta grows") {
  const auto& f = trained_mlp();
  const Tensor& x = f.data.x;
  const double B = calibrated_bound(f.net, x);
  const auto base = predict(f.net, x);
  const std::size_t n = x.dim(0);
  std::vector<std::vector<double>> drift;
  std::vector<double> mean;
  for (int beta = 6; beta <= 12; ++beta) {
    const auto y = predict(transform(f.net, make_composite_mode(beta, B), IntervalPolicy{B}), x);
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) d[i / 3] += std::abs(y[i] - base[i]) / 3.0;
    double m = 0.0;
    for (double v : d) m += v / static_cast<double>(n);
    drift.push_back(d);
    mean.push_back(m);
  }
  // The mean curve is checked at every beta step. Per-sample drift between
  // adjacent betas is dominated by error cancellation, so the 5% allowance is
  // applied pointwise across the full beta range.
  for (std::size_t k = 1; k < mean.size(); ++k) CHECK(mean[k] <= mean[k - 1]);
  std::size_t violations = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (drift.back()[s] > drift.front()[s]) ++violations;
  CHECK(static_cast<double>(violations) <= 0.05 * static_cast<double>(n));
}

TEST_CASE("transform leaves the source network untouched and records the mode") {
  const auto& f = trained_mlp();
  const Network copy = f.net;
  const auto t = transform(f.net, InjectedMode{8}, IntervalPolicy{});
  CHECK(f.net.metadata == copy.metadata);
  CHECK(std::holds_alternative<ExactRelu>(
      std::get<ActivationLayer>(f.net.layers()[f.net.activation_layers()[0]]).mode));
  CHECK(t.metadata["pann"]["mode"] == mode_name(InjectedMode{8}));
  CHECK(predict(restore_backbone(t), f.data.x) == predict(f.net, f.data.x));
  CHECK_THROWS_AS(transform(t, ExactRelu{}, IntervalPolicy{}), Error);
}

TEST_CASE("mask restricts the rewritten slots") {
  const auto& f = trained_mlp();
  TransformOptions o;
  o.mask = {false, true};
  const auto t = transform(f.net, InjectedMode{4}, IntervalPolicy{}, o);
  const auto slots = t.activation_layers();
  CHECK(std::holds_alternative<ExactRelu>(std::get<ActivationLayer>(t.layers()[slots[0]]).mode));
  CHECK(std::holds_alternative<InjectedMode>(std::get<ActivationLayer>(t.layers()[slots[1]]).mode));
  o.mask = {true};
  CHECK_THROWS_AS(transform(f.net, InjectedMode{4}, IntervalPolicy{}, o), Error);
}

TEST_CASE("partial replacement with c=1 binarized reproduces the backbone") {
  const auto& f = trained_mlp();
  const auto t = transform(f.net, PartialReplaceMode{default_quadratic_replacement(), 1.0, true},
                           IntervalPolicy{});
  CHECK(predict(t, f.data.x) == predict(f.net, f.data.x));
  CHECK_THROWS_AS(transform(f.net, PartialReplaceMode{default_quadratic_replacement(), 0.5, true},
                            IntervalPolicy{}),
                  Error);
}

TEST_CASE("replacement error formula") {
  CHECK(replacement_error(2.0, 1.9, 1.0, true) == 0.0);
  CHECK(replacement_error(2.0, 1.9, 0.0, false) == 0.0);
  CHECK(replacement_error(2.0, 1.9, 0.6, true) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS_AS(replacement_error(1.0, 1.0, 1.5, true), Error);
}

TEST_CASE("default quadratic replacement coefficients") {
  const auto p = default_quadratic_replacement();
  CHECK(p.coefficients() == std::vector<double>{0.28, 0.5, 0.14});
  CHECK(p(0.0) == 0.28);
  CHECK(p(1.0) == doctest::Approx(0.92).epsilon(1e-15));
  CHECK(p(-1.0) == doctest::Approx(-0.08).epsilon(1e-12));
}

TEST_CASE("uncertified composite modes are rejected") {
  try {
    transform(trained_mlp().net, CompositeMode{}, IntervalPolicy{});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotCertified);
  }
}

TEST_CASE("overflow policies: clamp counts, error aborts") {
  const auto& f = trained_mlp();
  const double B = 0.5 * calibrate_max_preactivation(f.net, f.data.x);
  const auto clamped =
      transform(f.net, make_composite_mode(8, B), IntervalPolicy{B, OverflowPolicy::kClampToB});
  const auto r = evaluate(clamped, f.data.x, f.data.labels);
  CHECK(r.stats.overflow > 0);
  CHECK(r.stats.overflow < r.stats.total);
  const auto strict =
      transform(f.net, make_composite_mode(8, B), IntervalPolicy{B, OverflowPolicy::kError});
  try {
    evaluate(strict, f.data.x, f.data.labels);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOverflow);
  }
}

TEST_CASE("widen policy rescales the approximant to the calibrated range") {
  const auto& f = trained_mlp();
  const double m = calibrate_max_preactivation(f.net, f.data.x);
  TransformOptions o;
  o.calibration_max = m;
  const auto t = transform(f.net, make_composite_mode(8, 0.5 * m),
                           IntervalPolicy{0.5 * m, OverflowPolicy::kWidenAndRecertify}, o);
  CHECK(t.metadata["pann"]["B"].get<double>() == doctest::Approx(1.2 * m));
  const auto r = evaluate(t, f.data.x, f.data.labels);
  CHECK(r.stats.overflow == 0);
}
