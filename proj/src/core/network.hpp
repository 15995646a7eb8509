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
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core/activation.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace pann {

/// z = x W^T + b with W shaped [out, in].
struct Dense {
  Tensor weight;
  Tensor bias;
};

enum class Padding { kValid, kSame };

/// Stride-1 convolution, kernel shaped [out_channels, in_channels, k, k], odd k
/// for same padding.
struct Conv2d {
  Tensor kernel;
  Tensor bias;
  Padding padding = Padding::kValid;
};

struct ActivationLayer {
  ActivationMode mode;
};

struct Flatten {};

/// Non-overlapping average pooling with a square window; trailing rows and
/// columns that do not fill a window are dropped.
struct AvgPool {
  std::size_t window = 2;
};

using Layer = std::variant<Dense, Conv2d, ActivationLayer, Flatten, AvgPool>;

const char* layer_name(const Layer& layer);

class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::size_t classes, std::vector<Layer> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t classes() const noexcept { return classes_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  /// Per-sample output shape of every layer; throws kShapeMismatch naming the
  /// first incompatible layer.
  std::vector<Shape> layer_shapes() const;
  void validate() const;

  /// Layer indices of the activation slots, in order.
  std::vector<std::size_t> activation_layers() const;

  /// Weights and biases of Dense and Conv2d layers in layer order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

  /// Free-form provenance stored with checkpoints (e.g. the transform record).
  nlohmann::json metadata = nlohmann::json::object();

 private:
  Shape input_shape_;
  std::size_t classes_ = 0;
  std::vector<Layer> layers_;
};

/// Architecture description:
///   {"type":"mlp","hidden":[256,256]}
///   {"type":"cnn","channels":[8,16],"kernel":5,"pool":2,"padding":"valid"}
/// Every hidden Dense/Conv2d is followed by one exact ReLU slot.
Network build_network(const nlohmann::json& arch, const Shape& input_shape, std::size_t classes,
                      std::uint64_t seed);

/// He-uniform weights, zero biases.
void init_parameters(Network& net, Rng& rng);

struct ForwardOptions {
  bool keep_trace = true;
  bool record_slopes = true;
  std::uint64_t sample_offset = 0;
  const NgnvConfig* ngnv = nullptr;  // training only
  Rng* ngnv_rng = nullptr;
  ActivationStats* stats = nullptr;
};

struct Trace {
  /// values[l] is the input of layer l; values.back() is the logits.
  std::vector<Tensor> values;
  /// slopes[l] is dy/dz of activation layer l, empty elsewhere.
  std::vector<Tensor> slopes;
  std::vector<std::size_t> activation_layers;

  /// Pre-activation tensor of activation slot k.
  const Tensor& preactivation(std::size_t k) const { return values.at(activation_layers.at(k)); }
  const Tensor& logits() const { return values.back(); }
};

struct ForwardResult {
  Tensor logits;
  Trace trace;
};

/// x has shape [batch, input_shape...]. Pure in (net, x, options).
ForwardResult forward(const Network& net, const Tensor& x, const ForwardOptions& options = {});

/// Forward without keeping intermediates.
Tensor predict(const Network& net, const Tensor& x, const ForwardOptions& options = {});

enum class LossKind { kCrossEntropy, kMse };

/// Cross entropy: batch mean of -sum t log softmax(logits). Mse: batch mean of
/// the per-sample sum of squared errors. Targets are [batch, classes].
double loss_value(const Tensor& logits, const Tensor& target, LossKind kind);

struct Gradients {
  double loss = 0.0;
  std::vector<Tensor> params;  // same order as Network::parameters()
  Tensor input;
};

/// Reverse pass over a forward trace (which must carry slopes). Throws
/// kDiverged on a non-finite loss.
Gradients backward(const Network& net, const ForwardResult& fwd, const Tensor& target,
                   LossKind kind);

/// Momentum SGD with coupled L2: g' = g + wd * W, v = mu * v + g', W -= lr * v.
/// The wd * W term is the gradient of (wd / 2) ||W||^2, i.e. the lambda / (2 eta)
/// regularizer scaled by the step size.
struct SgdState {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t epoch = 0;
  std::vector<Tensor> velocity;

  void validate() const;
};

void sgd_step(Network& net, const std::vector<Tensor>& grads, SgdState& state);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
  ActivationStats stats;
};

/// Mean cross-entropy and accuracy over a labelled set, in fixed-size batches
/// with sample offsets threaded through for injected-error counters.
EvalResult evaluate(const Network& net, const Tensor& x, std::span<const int> labels,
                    std::size_t batch_size = 256);

std::vector<int> predict_labels(const Network& net, const Tensor& x, std::size_t batch_size = 256);

/// Binary checkpoint: "PANNCKPT", u32 version, u64 header length, JSON header
/// (architecture, activation modes, metadata), then every parameter as
/// little-endian IEEE-754 binary64 in parameter order.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);
std::string serialize_checkpoint(const Network& net);
Network deserialize_checkpoint(const std::string& bytes);

}  // namespace pann
