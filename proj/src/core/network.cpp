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

#include "core/network.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "core/error.hpp"

namespace pann {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}

std::string at_layer(std::size_t index, const Layer& layer) {
  return "layer " + std::to_string(index) + " (" + layer_name(layer) + "): ";
}

std::size_t conv_pad(const Conv2d& c) {
  return c.padding == Padding::kSame ? (c.kernel.dim(2) - 1) / 2 : 0;
}

struct ConvGeometry {
  std::size_t channels, height, width, out_channels, k, pad, out_h, out_w;

  std::size_t patch() const { return channels * k * k; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Conv2d& c, const Shape& in) {
  ConvGeometry g{};
  g.channels = in[0];
  g.height = in[1];
  g.width = in[2];
  g.out_channels = c.kernel.dim(0);
  g.k = c.kernel.dim(2);
  g.pad = conv_pad(c);
  g.out_h = g.height + 2 * g.pad + 1 - g.k;
  g.out_w = g.width + 2 * g.pad + 1 - g.k;
  return g;
}

// col[(c*k + ki)*k + kj][oh*out_w + ow] = x[c][oh + ki - pad][ow + kj - pad].
void im2col(const double* x, const ConvGeometry& g, double* col) {
  const std::size_t np = g.out_pixels();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = col + ((c * g.k + ki) * g.k + kj) * np;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh + ki) - static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = x + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw =
                static_cast<std::ptrdiff_t>(ow + kj) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width))
                          ? 0.0
                          : src[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* dx) {
  const std::size_t np = g.out_pixels();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = col + ((c * g.k + ki) * g.k + kj) * np;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh + ki) - static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = dx + (c * g.height + static_cast<std::size_t>(ih)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const auto iw =
                static_cast<std::ptrdiff_t>(ow + kj) - static_cast<std::ptrdiff_t>(g.pad);
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.width))
              dst[static_cast<std::size_t>(iw)] += row[oh * g.out_w + ow];
          }
        }
      }
    }
  }
}

Tensor dense_forward(const Dense& d, const Tensor& x) {
  const std::size_t n = x.dim(0), in = d.weight.dim(1), out = d.weight.dim(0);
  Tensor z({n, out});
  auto Z = as_matrix(z, n, out);
  Z.noalias() = as_matrix(x, n, in) * as_matrix(d.weight, out, in).transpose();
  Z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(d.bias.data().data(),
                                                      static_cast<Eigen::Index>(out));
  return z;
}

Tensor conv_forward(const Conv2d& c, const Tensor& x) {
  const std::size_t n = x.dim(0);
  const ConvGeometry g = conv_geometry(c, {x.dim(1), x.dim(2), x.dim(3)});
  Tensor z({n, g.out_channels, g.out_h, g.out_w});
  Storage col(g.patch() * g.out_pixels());
  const auto K = as_matrix(c.kernel, g.out_channels, g.patch());
  const auto b = Eigen::Map<const Eigen::VectorXd>(c.bias.data().data(),
                                                   static_cast<Eigen::Index>(g.out_channels));
  const std::size_t in_stride = g.channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * g.out_pixels();
  for (std::size_t s = 0; s < n; ++s) {
    im2col(x.data().data() + s * in_stride, g, col.data());
    MatMap Z(z.data().data() + s * out_stride, static_cast<Eigen::Index>(g.out_channels),
             static_cast<Eigen::Index>(g.out_pixels()));
    Z.noalias() = K * ConstMatMap(col.data(), static_cast<Eigen::Index>(g.patch()),
                                  static_cast<Eigen::Index>(g.out_pixels()));
    Z.colwise() += b;
  }
  return z;
}

Tensor pool_forward(const AvgPool& p, const Tensor& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), k = p.window;
  const std::size_t oh = h / k, ow = w / k;
  Tensor y({n, c, oh, ow});
  const double inv = 1.0 / static_cast<double>(k * k);
  for (std::size_t s = 0; s < n * c; ++s) {
    const double* src = x.data().data() + s * h * w;
    double* dst = y.data().data() + s * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) acc += src[(i * k + a) * w + j * k + b];
        dst[i * ow + j] = acc * inv;
      }
    }
  }
  return y;
}

Tensor pool_backward(const AvgPool& p, const Shape& in_shape, const Tensor& gy) {
  const std::size_t n = in_shape[0], c = in_shape[1], h = in_shape[2], w = in_shape[3];
  const std::size_t k = p.window, oh = h / k, ow = w / k;
  Tensor gx(in_shape);
  const double inv = 1.0 / static_cast<double>(k * k);
  for (std::size_t s = 0; s < n * c; ++s) {
    const double* src = gy.data().data() + s * oh * ow;
    double* dst = gx.data().data() + s * h * w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const double v = src[i * ow + j] * inv;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) dst[(i * k + a) * w + j * k + b] = v;
      }
  }
  return gx;
}

Tensor layer_forward(const Layer& layer, std::size_t index, const Tensor& x, Tensor* slope,
                     const ForwardOptions& opt) {
  return std::visit(
      Overloaded{
          [&](const Dense& d) { return dense_forward(d, x); },
          [&](const Conv2d& c) { return conv_forward(c, x); },
          [&](const ActivationLayer& a) {
            Tensor y(x.shape());
            ActivationContext ctx{index, opt.sample_offset, opt.ngnv, opt.ngnv_rng, opt.stats};
            apply_activation(a.mode, x, y, slope, ctx);
            return y;
          },
          [&](const Flatten&) { return x.reshaped({x.dim(0), x.size() / x.dim(0)}); },
          [&](const AvgPool& p) { return pool_forward(p, x); },
      },
      layer);
}

void check_target(const Tensor& logits, const Tensor& target) {
  if (logits.shape() != target.shape()) {
    fail(ErrorCode::kShapeMismatch, "loss: target shape " + shape_string(target.shape()) +
                                        " does not match logits " + shape_string(logits.shape()));
  }
}

// Loss and dLoss/dlogits.
double loss_and_grad(const Tensor& logits, const Tensor& target, LossKind kind, Tensor* grad) {
  check_target(logits, target);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) *grad = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data().data() + s * k;
    const double* t = target.data().data() + s * k;
    if (kind == LossKind::kMse) {
      for (std::size_t j = 0; j < k; ++j) {
        const double d = z[j] - t[j];
        total += d * d;
        if (grad) (*grad)[s * k + j] = 2.0 * d * inv_n;
      }
      continue;
    }
    const double m = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - m);
    const double lse = m + std::log(sum);
    double tsum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (t[j] != 0.0) total -= t[j] * (z[j] - lse);
      tsum += t[j];
    }
    if (grad) {
      for (std::size_t j = 0; j < k; ++j)
        (*grad)[s * k + j] = (std::exp(z[j] - lse) * tsum - t[j]) * inv_n;
    }
  }
  return total * inv_n;
}

}  // namespace

const char* layer_name(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const Dense&) { return "dense"; },
                        [](const Conv2d&) { return "conv2d"; },
                        [](const ActivationLayer&) { return "activation"; },
                        [](const Flatten&) { return "flatten"; },
                        [](const AvgPool&) { return "avgpool"; },
                    },
                    layer);
}

Network::Network(Shape input_shape, std::size_t classes, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), classes_(classes), layers_(std::move(layers)) {
  validate();
}

std::vector<Shape> Network::layer_shapes() const {
  std::vector<Shape> shapes;
  Shape cur = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    cur = std::visit(
        Overloaded{
            [&](const Dense& d) -> Shape {
              if (d.weight.rank() != 2 || d.bias.shape() != Shape{d.weight.dim(0)})
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "malformed weight or bias");
              if (cur.size() != 1 || cur[0] != d.weight.dim(1))
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "expects input [" +
                                                    std::to_string(d.weight.dim(1)) + "], got " +
                                                    shape_string(cur));
              return {d.weight.dim(0)};
            },
            [&](const Conv2d& c) -> Shape {
              if (c.kernel.rank() != 4 || c.kernel.dim(2) != c.kernel.dim(3) ||
                  c.bias.shape() != Shape{c.kernel.dim(0)})
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "malformed kernel or bias");
              if (c.padding == Padding::kSame && c.kernel.dim(2) % 2 == 0)
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "same padding needs odd k");
              if (cur.size() != 3 || cur[0] != c.kernel.dim(1))
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "expects [" +
                                                    std::to_string(c.kernel.dim(1)) +
                                                    ", H, W], got " + shape_string(cur));
              const ConvGeometry g = conv_geometry(c, cur);
              if (cur[1] + 2 * g.pad < g.k || cur[2] + 2 * g.pad < g.k)
                fail(ErrorCode::kShapeMismatch, at_layer(i, layer) + "input smaller than kernel");
              return {g.out_channels, g.out_h, g.out_w};
            },
            [&](const ActivationLayer&) -> Shape {
              if (i == 0 || !(std::holds_alternative<Dense>(layers_[i - 1]) ||
                              std::holds_alternative<Conv2d>(layers_[i - 1])))
                fail(ErrorCode::kShapeMismatch,
                     at_layer(i, layer) + "must directly follow a dense or conv2d layer");
              return cur;
            },
            [&](const Flatten&) -> Shape { return {shape_numel(cur)}; },
            [&](const AvgPool& p) -> Shape {
              if (cur.size() != 3 || p.window == 0 || cur[1] < p.window || cur[2] < p.window)
                fail(ErrorCode::kShapeMismatch,
                     at_layer(i, layer) + "cannot pool input " + shape_string(cur));
              return {cur[0], cur[1] / p.window, cur[2] / p.window};
            },
        },
        layer);
    shapes.push_back(cur);
  }
  return shapes;
}

void Network::validate() const {
  require(!input_shape_.empty() && shape_numel(input_shape_) > 0, ErrorCode::kShapeMismatch,
          "network: empty input shape");
  require(classes_ > 0, ErrorCode::kInvalidArgument, "network: class count must be positive");
  const auto shapes = layer_shapes();
  const Shape out = shapes.empty() ? input_shape_ : shapes.back();
  if (out != Shape{classes_}) {
    fail(ErrorCode::kShapeMismatch, "network: output shape " + shape_string(out) +
                                        " does not match " + std::to_string(classes_) +
                                        " classes");
  }
}

std::vector<std::size_t> Network::activation_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (std::holds_alternative<ActivationLayer>(layers_[i])) out.push_back(i);
  return out;
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_) {
    if (auto* d = std::get_if<Dense>(&layer)) {
      out.push_back(&d->weight);
      out.push_back(&d->bias);
    } else if (auto* c = std::get_if<Conv2d>(&layer)) {
      out.push_back(&c->kernel);
      out.push_back(&c->bias);
    }
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (Tensor* t : const_cast<Network*>(this)->parameters()) out.push_back(t);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

void init_parameters(Network& net, Rng& rng) {
  for (auto& layer : net.layers()) {
    Tensor* w = nullptr;
    Tensor* b = nullptr;
    std::size_t fan_in = 0;
    if (auto* d = std::get_if<Dense>(&layer)) {
      w = &d->weight;
      b = &d->bias;
      fan_in = d->weight.dim(1);
    } else if (auto* c = std::get_if<Conv2d>(&layer)) {
      w = &c->kernel;
      b = &c->bias;
      fan_in = c->kernel.dim(1) * c->kernel.dim(2) * c->kernel.dim(3);
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w->data()) v = rng.uniform(-limit, limit);
    for (double& v : b->data()) v = 0.0;
  }
}

Network build_network(const nlohmann::json& arch, const Shape& input_shape, std::size_t classes,
                      std::uint64_t seed) {
  const std::string type = arch.value("type", std::string("mlp"));
  std::vector<Layer> layers;
  if (type == "mlp") {
    layers.emplace_back(Flatten{});
    std::size_t in = shape_numel(input_shape);
    for (std::size_t h : arch.value("hidden", std::vector<std::size_t>{})) {
      require(h > 0, ErrorCode::kInvalidArgument, "mlp: hidden width must be positive");
      layers.emplace_back(Dense{Tensor({h, in}), Tensor({h})});
      layers.emplace_back(ActivationLayer{ExactRelu{}});
      in = h;
    }
    layers.emplace_back(Dense{Tensor({classes, in}), Tensor({classes})});
  } else if (type == "cnn") {
    require(input_shape.size() == 3, ErrorCode::kShapeMismatch,
            "cnn: input must be [channels, height, width]");
    const auto k = arch.value("kernel", std::size_t{5});
    const auto pool = arch.value("pool", std::size_t{2});
    const Padding pad =
        arch.value("padding", std::string("valid")) == "same" ? Padding::kSame : Padding::kValid;
    std::size_t ch = input_shape[0], h = input_shape[1], w = input_shape[2];
    const std::size_t padding = pad == Padding::kSame ? (k - 1) / 2 : 0;
    for (std::size_t out : arch.value("channels", std::vector<std::size_t>{8, 16})) {
      require(h + 2 * padding >= k && w + 2 * padding >= k, ErrorCode::kShapeMismatch,
              "cnn: feature map smaller than the kernel");
      layers.emplace_back(Conv2d{Tensor({out, ch, k, k}), Tensor({out}), pad});
      layers.emplace_back(ActivationLayer{ExactRelu{}});
      h = h + 2 * padding + 1 - k;
      w = w + 2 * padding + 1 - k;
      if (pool > 1) {
        layers.emplace_back(AvgPool{pool});
        h /= pool;
        w /= pool;
      }
      ch = out;
    }
    layers.emplace_back(Flatten{});
    layers.emplace_back(Dense{Tensor({classes, ch * h * w}), Tensor({classes})});
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown architecture type '" + type + "'");
  }
  Network net(input_shape, classes, std::move(layers));
  Rng rng(derive_seed(seed, "init"));
  init_parameters(net, rng);
  return net;
}

ForwardResult forward(const Network& net, const Tensor& x, const ForwardOptions& options) {
  const Shape& in = net.input_shape();
  if (x.rank() != in.size() + 1 || !std::equal(in.begin(), in.end(), x.shape().begin() + 1)) {
    fail(ErrorCode::kShapeMismatch, "forward: layer 0 input " + shape_string(x.shape()) +
                                        " does not match [batch]" + shape_string(in));
  }
  const auto& layers = net.layers();
  ForwardResult r;
  if (options.keep_trace) {
    r.trace.values.reserve(layers.size() + 1);
    r.trace.values.push_back(x);
    r.trace.slopes.resize(layers.size());
    r.trace.activation_layers = net.activation_layers();
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Tensor* slope = options.keep_trace && options.record_slopes &&
                            std::holds_alternative<ActivationLayer>(layers[i])
                        ? &r.trace.slopes[i]
                        : nullptr;
    cur = layer_forward(layers[i], i, cur, slope, options);
    if (options.keep_trace) r.trace.values.push_back(cur);
  }
  r.logits = std::move(cur);
  return r;
}

Tensor predict(const Network& net, const Tensor& x, const ForwardOptions& options) {
  ForwardOptions o = options;
  o.keep_trace = false;
  o.record_slopes = false;
  return forward(net, x, o).logits;
}

double loss_value(const Tensor& logits, const Tensor& target, LossKind kind) {
  return loss_and_grad(logits, target, kind, nullptr);
}

Gradients backward(const Network& net, const ForwardResult& fwd, const Tensor& target,
                   LossKind kind) {
  const auto& layers = net.layers();
  const Trace& tr = fwd.trace;
  require(tr.values.size() == layers.size() + 1, ErrorCode::kPrecondition,
          "backward: forward trace missing");
  Gradients g;
  Tensor grad;
  g.loss = loss_and_grad(fwd.logits, target, kind, &grad);
  if (!std::isfinite(g.loss)) fail(ErrorCode::kDiverged, "backward: non-finite loss");

  std::vector<Tensor> rev_params;  // filled back to front
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Tensor& x = tr.values[li];
    const Layer& layer = layers[li];
    if (const auto* d = std::get_if<Dense>(&layer)) {
      const std::size_t n = x.dim(0), in = d->weight.dim(1), out = d->weight.dim(0);
      const auto G = as_matrix(grad, n, out);
      Tensor gw({out, in}), gb({out}), gx({n, in});
      as_matrix(gw, out, in).noalias() = G.transpose() * as_matrix(x, n, in);
      // Fixed summation order; an Eigen reduction would depend on alignment.
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) gb[o] += grad[r * out + o];
      as_matrix(gx, n, in).noalias() = G * as_matrix(d->weight, out, in);
      rev_params.push_back(std::move(gb));
      rev_params.push_back(std::move(gw));
      grad = std::move(gx);
    } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
      const std::size_t n = x.dim(0);
      const ConvGeometry geo = conv_geometry(*c, {x.dim(1), x.dim(2), x.dim(3)});
      const auto np = static_cast<Eigen::Index>(geo.out_pixels());
      const auto pk = static_cast<Eigen::Index>(geo.patch());
      const auto oc = static_cast<Eigen::Index>(geo.out_channels);
      Tensor gk(c->kernel.shape()), gb(c->bias.shape()), gx(x.shape());
      auto GK = as_matrix(gk, geo.out_channels, geo.patch());
      const auto K = as_matrix(c->kernel, geo.out_channels, geo.patch());
      Eigen::Map<Eigen::VectorXd> GB(gb.data().data(), oc);
      Storage col(geo.patch() * geo.out_pixels());
      RowMat dcol(pk, np);
      const std::size_t in_stride = geo.channels * geo.height * geo.width;
      const std::size_t out_stride = geo.out_channels * geo.out_pixels();
      for (std::size_t s = 0; s < n; ++s) {
        im2col(x.data().data() + s * in_stride, geo, col.data());
        const ConstMatMap C(col.data(), pk, np);
        const ConstMatMap G(grad.data().data() + s * out_stride, oc, np);
        GK.noalias() += G * C.transpose();
        for (Eigen::Index ch = 0; ch < oc; ++ch)
          for (Eigen::Index p = 0; p < np; ++p) GB[ch] += G(ch, p);
        dcol.noalias() = K.transpose() * G;
        col2im_add(dcol.data(), geo, gx.data().data() + s * in_stride);
      }
      rev_params.push_back(std::move(gb));
      rev_params.push_back(std::move(gk));
      grad = std::move(gx);
    } else if (std::holds_alternative<ActivationLayer>(layer)) {
      const Tensor& slope = tr.slopes[li];
      require(slope.size() == grad.size(), ErrorCode::kPrecondition,
              "backward: activation slopes were not recorded");
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= slope[i];
    } else if (std::holds_alternative<Flatten>(layer)) {
      grad.reshape(x.shape());
    } else if (const auto* p = std::get_if<AvgPool>(&layer)) {
      grad = pool_backward(*p, x.shape(), grad);
    }
  }
  g.params.assign(std::make_move_iterator(rev_params.rbegin()),
                  std::make_move_iterator(rev_params.rend()));
  g.input = std::move(grad);
  return g;
}

void SgdState::validate() const {
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::kInvalidArgument, "sgd: lr must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kInvalidArgument,
          "sgd: momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, ErrorCode::kInvalidArgument, "sgd: weight decay must be >= 0");
}

void sgd_step(Network& net, const std::vector<Tensor>& grads, SgdState& state) {
  auto params = net.parameters();
  require(grads.size() == params.size(), ErrorCode::kShapeMismatch,
          "sgd: gradient count does not match parameter count");
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (const Tensor* p : params) state.velocity.emplace_back(p->shape());
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k];
    Tensor& v = state.velocity[k];
    const Tensor& g = grads[k];
    if (g.shape() != w.shape() || v.shape() != w.shape()) {
      fail(ErrorCode::kShapeMismatch, "sgd: gradient " + std::to_string(k) + " has shape " +
                                          shape_string(g.shape()) + ", parameter has " +
                                          shape_string(w.shape()));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + state.weight_decay * w[i];
      v[i] = state.momentum * v[i] + gi;
      w[i] -= state.lr * v[i];
    }
  }
}

EvalResult evaluate(const Network& net, const Tensor& x, std::span<const int> labels,
                    std::size_t batch_size) {
  require(x.rank() >= 1 && x.dim(0) == labels.size(), ErrorCode::kShapeMismatch,
          "evaluate: label count does not match sample count");
  require(batch_size > 0, ErrorCode::kInvalidArgument, "evaluate: batch size must be positive");
  EvalResult r;
  const std::size_t n = labels.size();
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    ForwardOptions opt;
    opt.sample_offset = begin;
    opt.stats = &r.stats;
    const Tensor logits = predict(net, x.slice_rows(begin, end), opt);
    const Tensor target = one_hot(labels.subspan(begin, end - begin), net.classes());
    loss_sum += loss_value(logits, target, LossKind::kCrossEntropy) *
                static_cast<double>(end - begin);
    const auto pred = argmax_rows(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) r.correct += pred[i] == labels[begin + i];
  }
  r.count = n;
  r.loss = n ? loss_sum / static_cast<double>(n) : 0.0;
  r.accuracy = n ? static_cast<double>(r.correct) / static_cast<double>(n) : 0.0;
  return r;
}

std::vector<int> predict_labels(const Network& net, const Tensor& x, std::size_t batch_size) {
  std::vector<int> out;
  const std::size_t n = x.dim(0);
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    ForwardOptions opt;
    opt.sample_offset = begin;
    const auto pred = argmax_rows(predict(net, x.slice_rows(begin, end), opt));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

}  // namespace pann
