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
#include <vector>

#include <json.hpp>

#include "core/tensor.hpp"

namespace pann {

struct Dataset {
  Tensor x;  // [n, sample shape...]
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;
  /// First `n` samples (or all when n == 0 or n >= size()).
  Dataset head(std::size_t n) const;
  /// Rows selected by index, in the given order.
  Dataset subset(std::span<const std::size_t> idx) const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

enum class DatasetSource { kMnistIdx, kCifar10Binary, kSyntheticBlobs, kSyntheticMoons };

struct DatasetSpec {
  DatasetSource source = DatasetSource::kSyntheticBlobs;
  /// Directory with the IDX or CIFAR-10 files. Empty resolves through the
  /// PANN_DATA_DIR environment variable, then the build-time default.
  std::string path;
  std::size_t train_limit = 0;  // 0 keeps every sample
  std::size_t test_limit = 0;
  // Synthetic generators.
  std::size_t n = 1000;
  std::size_t classes = 2;
  std::size_t dim = 2;
  double noise = 0.1;
  double test_fraction = 0.25;
  std::uint64_t seed = 1;
  // Applied to file-backed pixels after scaling bytes to [0, 1].
  double mean = 0.0;
  double stddev = 1.0;

  void validate() const;
};

DatasetSpec dataset_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetSpec& spec);
const char* to_string(DatasetSource s);

DatasetSplit load_dataset(const DatasetSpec& spec);

/// Directory used when a spec leaves `path` empty.
std::string default_data_dir();

/// IDX readers over raw bytes; `what` names the source in error messages.
/// Images come back as [n, 1, rows, cols] scaled to [0, 1]. The whole file is
/// validated; `limit` > 0 keeps only the first `limit` records.
Tensor parse_idx_images(const std::string& bytes, const std::string& what, std::size_t limit = 0);
std::vector<int> parse_idx_labels(const std::string& bytes, const std::string& what,
                                  std::size_t limit = 0);

/// CIFAR-10 binary batch: 3073-byte records (label, 3x32x32 pixels).
Dataset parse_cifar10_batch(const std::string& bytes, const std::string& what);

/// n points; label i % classes so counts are balanced; class c centred at
/// +4 e_c (then -4 e_{c-dim}, then random) with unit Gaussian spread.
Dataset synthetic_blobs(std::size_t n, std::size_t classes, std::size_t dim, std::uint64_t seed);

/// Two interleaved half circles with Gaussian noise, labels alternating.
Dataset synthetic_moons(std::size_t n, double noise, std::uint64_t seed);

std::string read_file(const std::string& path);

}  // namespace pann
