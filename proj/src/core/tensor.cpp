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

#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace pann {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::span<const double> data)
    : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}

Tensor::Tensor(Shape shape, Storage data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(shape_numel(shape_) == data_.size(), ErrorCode::kShapeMismatch,
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

void Tensor::reshape(Shape shape) {
  require(shape_numel(shape) == data_.size(), ErrorCode::kShapeMismatch,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  shape_ = std::move(shape);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  require(rank() >= 1 && begin <= end && end <= shape_[0],
          ErrorCode::kShapeMismatch, "row slice out of range");
  const std::size_t row = data_.size() / std::max<std::size_t>(shape_[0], 1);
  Shape s = shape_;
  s[0] = end - begin;
  return Tensor(std::move(s),
                Storage(data_.begin() + begin * row, data_.begin() + end * row));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> idx) {
  require(src.rank() >= 1, ErrorCode::kShapeMismatch, "gather on scalar");
  const std::size_t row = src.size() / src.dim(0);
  Shape s = src.shape();
  s[0] = idx.size();
  Storage out(idx.size() * row);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < src.dim(0), ErrorCode::kInvalidArgument, "gather index out of range");
    std::copy_n(src.data().begin() + idx[i] * row, row, out.begin() + i * row);
  }
  return Tensor(std::move(s), std::move(out));
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < classes,
            ErrorCode::kInvalidArgument, "label out of range");
    t[i * classes + labels[i]] = 1.0;
  }
  return t;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  require(logits.rank() == 2, ErrorCode::kShapeMismatch, "argmax expects [batch, classes]");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logits.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace pann
