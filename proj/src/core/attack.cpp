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

#include "core/attack.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/training.hpp"
#include "core/transform.hpp"

namespace pann {

void AttackConfig::validate() const {
  require(alpha > 0.0 && eps > 0.0 && eps_atk > 0.0 && eps_lim > 0.0 && search_radius > 0.0,
          ErrorCode::kInvalidArgument, "attack: alpha, eps, eps_atk, eps_lim and radius must be > 0");
  require(std::isfinite(alpha) && std::isfinite(eps) && std::isfinite(search_radius),
          ErrorCode::kInvalidArgument, "attack: alpha, eps and radius must be finite");
  require(backtrack_depth > 0, ErrorCode::kInvalidArgument, "attack: backtrack depth must be > 0");
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
  AttackConfig c;
  try {
    c.alpha = j.value("alpha", c.alpha);
    c.eps = j.value("eps", c.eps);
    c.eps_atk = j.value("eps_atk", c.eps_atk);
    if (j.contains("eps_lim") && !j.at("eps_lim").is_null()) c.eps_lim = j.at("eps_lim").get<double>();
    c.search_radius = j.value("search_radius", c.search_radius);
    c.search_draws = j.value("search_draws", c.search_draws);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.backtrack_depth = j.value("backtrack_depth", c.backtrack_depth);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("attack config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const AttackConfig& c) {
  return {{"alpha", c.alpha},
          {"eps", c.eps},
          {"eps_atk", c.eps_atk},
          {"eps_lim", std::isfinite(c.eps_lim) ? nlohmann::json(c.eps_lim) : nlohmann::json()},
          {"search_radius", c.search_radius},
          {"search_draws", c.search_draws},
          {"max_iterations", c.max_iterations},
          {"backtrack_depth", c.backtrack_depth},
          {"seed", c.seed}};
}

int predict_one(const Network& net, const Tensor& x) {
  ForwardOptions opt;
  opt.keep_trace = false;
  opt.record_slopes = false;
  return argmax_rows(predict(net, x, opt)).at(0);
}

namespace {

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

void clip(Tensor& d, double eps) {
  for (double& v : d.values()) v = std::clamp(v, -eps, eps);
}

struct LossGrad {
  double loss;
  Tensor grad;
};

LossGrad loss_and_input_grad(const Network& net, const Tensor& x, int y) {
  const int label[] = {y};
  const auto fwd = forward(net, x);
  auto g = backward(net, fwd, one_hot(label, net.classes()), LossKind::kCrossEntropy);
  return {g.loss, std::move(g.input)};
}

double loss_only(const Network& net, const Tensor& x, int y) {
  const int label[] = {y};
  ForwardOptions opt;
  opt.keep_trace = false;
  opt.record_slopes = false;
  return loss_value(predict(net, x, opt), one_hot(label, net.classes()), LossKind::kCrossEntropy);
}

}  // namespace

AttackOutcome attack_pann(const Tensor& x, int y, const Network& backbone, const Network& pann,
                          const AttackConfig& cfg) {
  cfg.validate();
  require(x.rank() >= 1 && x.dim(0) == 1, ErrorCode::kShapeMismatch,
          "attack: x must hold exactly one sample");
  const int clean_pred = predict_one(backbone, x);
  if (clean_pred != y) {
    fail(ErrorCode::kPrecondition, "attack: backbone misclassifies the clean sample (predicts " +
                                       std::to_string(clean_pred) + ", label " +
                                       std::to_string(y) + ")");
  }

  AttackOutcome out;
  out.delta = Tensor(x.shape());
  if (predict_one(pann, x) != y) {
    out.success = true;
    return out;
  }

  Rng rng(derive_seed(cfg.seed, "attack"));
  const Tensor clean_grad = loss_and_input_grad(backbone, x, y).grad;
  Tensor accepted = out.delta;
  double alpha = cfg.alpha;
  std::size_t consecutive_backtracks = 0;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    out.iterations = it + 1;
    const Tensor xd = add(x, accepted);
    const Tensor gp = loss_and_input_grad(pann, xd, y).grad;
    const Tensor gb = loss_and_input_grad(backbone, xd, y).grad;

    Tensor delta = accepted;
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += alpha * gp[i];
    clip(delta, cfg.eps);

    // Random search: keep the draw with the largest PANN loss among those the
    // backbone still classifies correctly.
    double best = -INFINITY;
    Tensor best_delta = delta;
    if (predict_one(backbone, add(x, delta)) == y) best = loss_only(pann, add(x, delta), y);
    for (std::size_t k = 0; k < cfg.search_draws; ++k) {
      Tensor cand = delta;
      for (double& v : cand.values()) v += rng.uniform(-cfg.search_radius, cfg.search_radius);
      clip(cand, cfg.eps);
      const Tensor xc = add(x, cand);
      if (predict_one(backbone, xc) != y) continue;
      const double l = loss_only(pann, xc, y);
      if (l > best) {
        best = l;
        best_delta = std::move(cand);
      }
    }
    delta = std::move(best_delta);
    clip(delta, cfg.eps);

    for (std::size_t i = 0; i < delta.size(); ++i) {
      if (std::abs(gp[i] - gb[i]) < cfg.eps_atk) delta[i] = 0.0;
      if (std::abs(gb[i] - clean_grad[i]) > cfg.eps_lim) delta[i] = 0.0;
    }

    AttackStep step;
    step.iteration = it + 1;
    step.alpha = alpha;
    const Tensor xn = add(x, delta);
    if (predict_one(backbone, xn) != y) {
      step.backtracked = true;
      alpha /= 2.0;
      ++consecutive_backtracks;
      step.backbone_pred = predict_one(backbone, add(x, accepted));
      step.pann_pred = predict_one(pann, add(x, accepted));
      out.trace.push_back(step);
      if (consecutive_backtracks >= cfg.backtrack_depth) {
        out.failure = "backtrack depth exhausted";
        out.delta = accepted;
        return out;
      }
      continue;
    }
    consecutive_backtracks = 0;
    alpha = cfg.alpha;
    accepted = delta;
    step.backbone_pred = y;
    step.pann_pred = predict_one(pann, xn);
    out.trace.push_back(step);
    if (step.pann_pred != y) {
      out.success = true;
      out.delta = accepted;
      return out;
    }
  }
  out.failure = "iteration cap reached";
  out.delta = accepted;
  return out;
}

bool verify_outcome(const Tensor& x, int y, const Tensor& delta, const Network& backbone,
                    const Network& pann, double eps) {
  if (delta.shape() != x.shape() || !delta.all_finite()) return false;
  if (delta.max_abs() > eps) return false;
  const Tensor xd = add(x, delta);
  return predict_one(backbone, xd) == y && predict_one(pann, xd) != y;
}

std::size_t grid_discrepancy_count(const Tensor& x, int y, const Network& backbone,
                                   const Network& pann, double eps, std::size_t steps) {
  require(steps > 0 && eps > 0.0, ErrorCode::kInvalidArgument, "grid oracle: bad grid");
  const std::size_t d = x.size();
  require(d <= 3, ErrorCode::kInvalidArgument, "grid oracle: at most 3 input dimensions");
  const std::size_t per_axis = 2 * steps + 1;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= per_axis;
  std::size_t hits = 0;
  Tensor delta(x.shape());
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t i = 0; i < d; ++i) {
      const auto k = static_cast<double>(rem % per_axis);
      rem /= per_axis;
      delta[i] = eps * (k - static_cast<double>(steps)) / static_cast<double>(steps);
    }
    const Tensor xd = add(x, delta);
    if (predict_one(backbone, xd) == y && predict_one(pann, xd) != y) ++hits;
  }
  return hits;
}

ToyAttackInstance make_toy_attack_instance(int beta, std::uint64_t seed) {
  Dataset data = synthetic_moons(400, 0.15, seed);
  Network net = build_network({{"type", "mlp"}, {"hidden", {4}}}, data.sample_shape(), 2, seed);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.lr.base = 0.1;
  cfg.seed = seed;
  cfg.eval_train = false;
  Network backbone = train(std::move(net), data, nullptr, cfg).net;
  Network pann = transform(
      backbone, InjectedMode{beta, SignFilter::kAll, InjectionKind::kUniformRandom, seed, false},
      IntervalPolicy{});
  return {std::move(backbone), std::move(pann), std::move(data)};
}

nlohmann::json to_json(const AttackOutcome& o) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : o.trace) {
    trace.push_back({{"iteration", s.iteration},
                     {"backbone_pred", s.backbone_pred},
                     {"pann_pred", s.pann_pred},
                     {"backtracked", s.backtracked},
                     {"alpha", s.alpha}});
  }
  double l1 = 0.0, l2 = 0.0;
  for (double v : o.delta.values()) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  nlohmann::json j{{"success", o.success},
                   {"iterations", o.iterations},
                   {"delta_linf", o.delta.max_abs()},
                   {"delta_l1", l1},
                   {"delta_l2", std::sqrt(l2)},
                   {"trace", trace}};
  if (!o.success) j["failure"] = o.failure;
  return j;
}

}  // namespace pann
