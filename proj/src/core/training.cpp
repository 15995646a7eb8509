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

#include "core/training.hpp"

#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace pann {

void MixupConfig::validate() const {
  require(alpha > 0.0 && std::isfinite(alpha), ErrorCode::kInvalidArgument,
          "mixup: alpha must be positive");
  if (force_lambda) {
    require(*force_lambda >= 0.0 && *force_lambda <= 1.0, ErrorCode::kInvalidArgument,
            "mixup: forced lambda must lie in [0, 1]");
  }
}

double LrSchedule::at(std::size_t epoch) const {
  double lr = base;
  for (std::size_t m : milestones)
    if (epoch >= m) lr *= gamma;
  return lr;
}

void TrainConfig::validate() const {
  require(batch_size > 0, ErrorCode::kInvalidArgument, "train: batch_size must be positive");
  require(eval_batch > 0, ErrorCode::kInvalidArgument, "train: eval_batch must be positive");
  require(lr.base > 0.0 && lr.gamma > 0.0, ErrorCode::kInvalidArgument,
          "train: learning rate and gamma must be positive");
  SgdState{lr.base, momentum, weight_decay, 0, {}}.validate();
  mixup.validate();
  ngnv.validate();
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.eval_train = j.value("eval_train", c.eval_train);
    c.eval_batch = j.value("eval_batch", c.eval_batch);
    if (j.contains("lr")) {
      const auto& l = j.at("lr");
      if (l.is_number()) {
        c.lr.base = l.get<double>();
      } else {
        c.lr.base = l.value("base", c.lr.base);
        c.lr.milestones = l.value("milestones", c.lr.milestones);
        c.lr.gamma = l.value("gamma", c.lr.gamma);
      }
    }
    const std::string loss = j.value("loss", std::string("cross_entropy"));
    if (loss == "cross_entropy") c.loss = LossKind::kCrossEntropy;
    else if (loss == "mse") c.loss = LossKind::kMse;
    else fail(ErrorCode::kParse, "train.loss: unknown value '" + loss + "'");
    if (j.contains("mixup")) {
      const auto& m = j.at("mixup");
      c.mixup.enabled = m.value("enabled", true);
      c.mixup.alpha = m.value("alpha", c.mixup.alpha);
      if (m.contains("force_lambda")) c.mixup.force_lambda = m.at("force_lambda").get<double>();
    }
    if (j.contains("ngnv")) {
      const auto& n = j.at("ngnv");
      c.ngnv.enabled = n.value("enabled", true);
      c.ngnv.r = n.value("r", c.ngnv.r);
      c.ngnv.lambda = n.value("lambda", c.ngnv.lambda);
      c.ngnv.fixed_sign = n.value("fixed_sign", c.ngnv.fixed_sign);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("train: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j{
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", {{"base", c.lr.base}, {"milestones", c.lr.milestones}, {"gamma", c.lr.gamma}}},
      {"momentum", c.momentum},
      {"weight_decay", c.weight_decay},
      {"loss", c.loss == LossKind::kMse ? "mse" : "cross_entropy"},
      {"seed", c.seed},
      {"eval_train", c.eval_train},
      {"eval_batch", c.eval_batch},
      {"mixup", {{"enabled", c.mixup.enabled}, {"alpha", c.mixup.alpha}}},
      {"ngnv",
       {{"enabled", c.ngnv.enabled},
        {"r", c.ngnv.r},
        {"lambda", c.ngnv.lambda},
        {"fixed_sign", c.ngnv.fixed_sign}}},
  };
  if (c.mixup.force_lambda) j["mixup"]["force_lambda"] = *c.mixup.force_lambda;
  return j;
}

std::pair<Tensor, Tensor> mixup_batch(const Tensor& x, const Tensor& x2, const Tensor& y,
                                      const Tensor& y2, double lambda) {
  require(x.shape() == x2.shape() && y.shape() == y2.shape(), ErrorCode::kShapeMismatch,
          "mixup: paired batches differ in shape");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kInvalidArgument,
          "mixup: lambda must lie in [0, 1]");
  if (lambda == 1.0) return {x, y};
  auto mix = [lambda](const Tensor& a, const Tensor& b) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
    return out;
  };
  return {mix(x, x2), mix(y, y2)};
}

TrainResult train(Network net, const Dataset& train_set, const Dataset* test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(train_set.size() > 0, ErrorCode::kInvalidArgument, "train: empty training set");
  require(train_set.classes == net.classes(), ErrorCode::kShapeMismatch,
          "train: dataset classes do not match the network");

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng mixup_rng(derive_seed(cfg.seed, "mixup"));
  Rng ngnv_rng(derive_seed(cfg.seed, "ngnv"));
  SgdState sgd{cfg.lr.base, cfg.momentum, cfg.weight_decay, 0, {}};

  TrainResult result;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    sgd.epoch = epoch;
    sgd.lr = cfg.lr.at(epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);

    double objective = 0.0;
    try {
      for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
        const std::size_t end = std::min(n, begin + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + begin, end - begin);
        Tensor xb = gather_rows(train_set.x, idx);
        std::vector<int> yb;
        yb.reserve(idx.size());
        for (std::size_t i : idx) yb.push_back(train_set.labels[i]);
        Tensor target = one_hot(yb, net.classes());

        if (cfg.mixup.enabled) {
          std::vector<std::size_t> perm(idx.size());
          std::iota(perm.begin(), perm.end(), std::size_t{0});
          for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[mixup_rng.index(i)]);
          const double lam = cfg.mixup.force_lambda
                                 ? *cfg.mixup.force_lambda
                                 : mixup_rng.beta(cfg.mixup.alpha, cfg.mixup.alpha);
          auto [xm, ym] =
              mixup_batch(xb, gather_rows(xb, perm), target, gather_rows(target, perm), lam);
          xb = std::move(xm);
          target = std::move(ym);
        }

        ForwardOptions opt;
        opt.ngnv = &cfg.ngnv;
        opt.ngnv_rng = &ngnv_rng;
        const auto fwd = forward(net, xb, opt);
        const auto grads = backward(net, fwd, target, cfg.loss);
        objective += grads.loss * static_cast<double>(end - begin);
        sgd_step(net, grads.params, sgd);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDiverged) {
        fail(ErrorCode::kDiverged,
             "training diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what());
      }
      throw;
    }
    bool finite = true;
    for (const Tensor* p : net.parameters()) finite = finite && p->all_finite();
    if (!finite) {
      fail(ErrorCode::kDiverged,
           "training diverged in epoch " + std::to_string(epoch + 1) + ": non-finite weights");
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = sgd.lr;
    m.objective = objective / static_cast<double>(n);
    if (cfg.eval_train) {
      const auto r = evaluate(net, train_set.x, train_set.labels, cfg.eval_batch);
      m.train_loss = r.loss;
      m.train_accuracy = r.accuracy;
    }
    if (test_set && test_set->size() > 0) {
      const auto r = evaluate(net, test_set->x, test_set->labels, cfg.eval_batch);
      m.test_loss = r.loss;
      m.test_accuracy = r.accuracy;
    }
    result.history.push_back(m);
    if (on_epoch) on_epoch(m, net);
  }
  result.net = std::move(net);
  return result;
}

std::optional<std::size_t> plateau_epoch(const std::vector<EpochMetrics>& history, double rel_tol,
                                         std::size_t window) {
  for (std::size_t i = 0; i + window < history.size(); ++i) {
    const double now = history[i].train_loss;
    const double later = history[i + window].train_loss;
    const double denom = std::max(std::abs(now), 1e-300);
    if ((now - later) / denom < rel_tol) return history[i].epoch;
  }
  return std::nullopt;
}

}  // namespace pann
