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

#include "core/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

#ifndef PANN_DEFAULT_DATA_DIR
#define PANN_DEFAULT_DATA_DIR "data"
#endif

namespace pann {

namespace {

std::uint32_t read_be32(const std::string& b, std::size_t offset, const std::string& what) {
  if (offset + 4 > b.size()) {
    fail(ErrorCode::kParse, what + ": header truncated at byte " + std::to_string(offset) +
                                " (file has " + std::to_string(b.size()) + " bytes)");
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(b[offset + i]);
  return v;
}

void check_length(const std::string& b, std::size_t expected, const std::string& what) {
  if (b.size() != expected) {
    fail(ErrorCode::kParse, what + ": expected " + std::to_string(expected) +
                                " bytes from the header, got " + std::to_string(b.size()) +
                                (b.size() < expected ? " (truncated at byte " : " (trailing data at byte ") +
                                std::to_string(std::min(b.size(), expected)) + ")");
  }
}

Dataset split_tail(Dataset& all, double fraction) {
  const auto n_test = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(all.size())));
  const std::size_t n_train = all.size() - n_test;
  Dataset test;
  test.x = all.x.slice_rows(n_train, all.size());
  test.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(n_train), all.labels.end());
  test.classes = all.classes;
  all = all.head(n_train);
  return test;
}

void normalize(Tensor& x, double mean, double stddev) {
  if (mean == 0.0 && stddev == 1.0) return;
  for (double& v : x.data()) v = (v - mean) / stddev;
}

}  // namespace

Shape Dataset::sample_shape() const {
  return Shape(x.shape().begin() + 1, x.shape().end());
}

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  Dataset d;
  d.x = x.slice_rows(0, n);
  d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  d.classes = classes;
  return d;
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset d;
  d.x = gather_rows(x, idx);
  d.labels.reserve(idx.size());
  for (std::size_t i : idx) d.labels.push_back(labels.at(i));
  d.classes = classes;
  return d;
}

void DatasetSpec::validate() const {
  require(stddev > 0.0, ErrorCode::kInvalidArgument, "dataset: stddev must be positive");
  require(test_fraction >= 0.0 && test_fraction < 1.0, ErrorCode::kInvalidArgument,
          "dataset: test_fraction must lie in [0, 1)");
  if (source == DatasetSource::kSyntheticBlobs || source == DatasetSource::kSyntheticMoons) {
    require(n >= 2, ErrorCode::kInvalidArgument, "dataset: synthetic n must be at least 2");
  }
  if (source == DatasetSource::kSyntheticBlobs) {
    require(classes >= 2 && dim >= 1, ErrorCode::kInvalidArgument,
            "dataset: blobs need classes >= 2 and dim >= 1");
  }
  require(noise >= 0.0, ErrorCode::kInvalidArgument, "dataset: noise must be non-negative");
}

const char* to_string(DatasetSource s) {
  switch (s) {
    case DatasetSource::kMnistIdx:
      return "mnist_idx";
    case DatasetSource::kCifar10Binary:
      return "cifar10_binary";
    case DatasetSource::kSyntheticBlobs:
      return "synthetic_blobs";
    case DatasetSource::kSyntheticMoons:
      return "synthetic_moons";
  }
  return "?";
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec s;
  try {
    const std::string src = j.at("source").get<std::string>();
    if (src == "mnist_idx") s.source = DatasetSource::kMnistIdx;
    else if (src == "cifar10_binary") s.source = DatasetSource::kCifar10Binary;
    else if (src == "synthetic_blobs") s.source = DatasetSource::kSyntheticBlobs;
    else if (src == "synthetic_moons") s.source = DatasetSource::kSyntheticMoons;
    else fail(ErrorCode::kParse, "dataset.source: unknown value '" + src + "'");
    s.path = j.value("path", s.path);
    s.train_limit = j.value("train_limit", s.train_limit);
    s.test_limit = j.value("test_limit", s.test_limit);
    s.n = j.value("n", s.n);
    s.classes = j.value("classes", s.classes);
    s.dim = j.value("dim", s.dim);
    s.noise = j.value("noise", s.noise);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    s.seed = j.value("seed", s.seed);
    s.mean = j.value("mean", s.mean);
    s.stddev = j.value("stddev", s.stddev);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("dataset: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const DatasetSpec& s) {
  nlohmann::json j{{"source", to_string(s.source)}};
  if (s.source == DatasetSource::kMnistIdx || s.source == DatasetSource::kCifar10Binary) {
    j["path"] = s.path;
    j["train_limit"] = s.train_limit;
    j["test_limit"] = s.test_limit;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
  } else {
    j["n"] = s.n;
    j["seed"] = s.seed;
    j["test_fraction"] = s.test_fraction;
    if (s.source == DatasetSource::kSyntheticBlobs) {
      j["classes"] = s.classes;
      j["dim"] = s.dim;
    } else {
      j["noise"] = s.noise;
    }
  }
  return j;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("PANN_DATA_DIR"); env && *env) return env;
  return PANN_DEFAULT_DATA_DIR;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Tensor parse_idx_images(const std::string& bytes, const std::string& what, std::size_t limit) {
  const std::uint32_t magic = read_be32(bytes, 0, what);
  if (magic != 0x00000803u) {
    fail(ErrorCode::kParse, what + ": bad magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", magic);
      return std::string(buf);
    }() + " at byte 0, expected 0x00000803");
  }
  const std::size_t n = read_be32(bytes, 4, what);
  const std::size_t rows = read_be32(bytes, 8, what);
  const std::size_t cols = read_be32(bytes, 12, what);
  check_length(bytes, 16 + n * rows * cols, what);
  const std::size_t keep = limit == 0 ? n : std::min(n, limit);
  Tensor x({keep, 1, rows, cols});
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = static_cast<double>(static_cast<unsigned char>(bytes[16 + i])) / 255.0;
  return x;
}

std::vector<int> parse_idx_labels(const std::string& bytes, const std::string& what,
                                  std::size_t limit) {
  const std::uint32_t magic = read_be32(bytes, 0, what);
  if (magic != 0x00000801u) {
    fail(ErrorCode::kParse, what + ": bad magic at byte 0, expected 0x00000801, got " +
                                std::to_string(magic));
  }
  const std::size_t n = read_be32(bytes, 4, what);
  check_length(bytes, 8 + n, what);
  std::vector<int> labels(limit == 0 ? n : std::min(n, limit));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<unsigned char>(bytes[8 + i]);
    if (labels[i] > 9) {
      fail(ErrorCode::kParse, what + ": label " + std::to_string(labels[i]) + " at byte " +
                                  std::to_string(8 + i) + " outside [0, 10)");
    }
  }
  return labels;
}

Dataset parse_cifar10_batch(const std::string& bytes, const std::string& what) {
  constexpr std::size_t kRecord = 3073;
  if (bytes.size() % kRecord != 0) {
    fail(ErrorCode::kParse, what + ": " + std::to_string(bytes.size()) +
                                " bytes is not a whole number of 3073-byte records; last record "
                                "starts at byte " +
                                std::to_string(bytes.size() / kRecord * kRecord));
  }
  const std::size_t n = bytes.size() / kRecord;
  Dataset d;
  d.classes = 10;
  d.x = Tensor({n, 3, 32, 32});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * kRecord;
    const int label = static_cast<unsigned char>(bytes[off]);
    if (label > 9) {
      fail(ErrorCode::kParse, what + ": label " + std::to_string(label) + " at byte " +
                                  std::to_string(off) + " outside [0, 10)");
    }
    d.labels[i] = label;
    for (std::size_t p = 0; p < 3072; ++p)
      d.x[i * 3072 + p] = static_cast<double>(static_cast<unsigned char>(bytes[off + 1 + p])) / 255.0;
  }
  return d;
}

Dataset synthetic_blobs(std::size_t n, std::size_t classes, std::size_t dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "blobs"));
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < classes; ++c) {
    if (c < 2 * dim) {
      centers[c][c % dim] = c < dim ? 4.0 : -4.0;
    } else {
      for (double& v : centers[c]) v = 4.0 * rng.normal();
    }
  }
  Dataset d;
  d.classes = classes;
  d.x = Tensor({n, dim});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    d.labels[i] = static_cast<int>(c);
    for (std::size_t k = 0; k < dim; ++k) d.x[i * dim + k] = centers[c][k] + rng.normal();
  }
  return d;
}

Dataset synthetic_moons(std::size_t n, double noise, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "moons"));
  Dataset d;
  d.classes = 2;
  d.x = Tensor({n, 2});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double t = rng.uniform(0.0, std::numbers::pi);
    double px = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double py = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
    px += noise * rng.normal();
    py += noise * rng.normal();
    d.x[2 * i] = px;
    d.x[2 * i + 1] = py;
    d.labels[i] = c;
  }
  return d;
}

DatasetSplit load_dataset(const DatasetSpec& spec) {
  spec.validate();
  DatasetSplit out;
  namespace fs = std::filesystem;
  const fs::path dir = spec.path.empty() ? fs::path(default_data_dir()) : fs::path(spec.path);
  switch (spec.source) {
    case DatasetSource::kMnistIdx: {
      auto load = [&](const char* images, const char* labels, std::size_t limit) {
        const auto ip = (dir / images).string();
        const auto lp = (dir / labels).string();
        Dataset d;
        d.classes = 10;
        d.x = parse_idx_images(read_file(ip), ip, limit);
        d.labels = parse_idx_labels(read_file(lp), lp, limit);
        if (d.labels.size() != d.x.dim(0)) {
          fail(ErrorCode::kParse, ip + ": " + std::to_string(d.x.dim(0)) + " images but " +
                                      std::to_string(d.labels.size()) + " labels");
        }
        return d;
      };
      out.train = load("train-images-idx3-ubyte", "train-labels-idx1-ubyte", spec.train_limit);
      out.test = load("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", spec.test_limit);
      break;
    }
    case DatasetSource::kCifar10Binary: {
      std::vector<Dataset> parts;
      for (int b = 1; b <= 5; ++b) {
        const auto p = (dir / ("data_batch_" + std::to_string(b) + ".bin")).string();
        parts.push_back(parse_cifar10_batch(read_file(p), p));
      }
      std::size_t total = 0;
      for (const auto& p : parts) total += p.size();
      out.train.classes = 10;
      out.train.x = Tensor({total, 3, 32, 32});
      std::size_t at = 0;
      for (const auto& p : parts) {
        std::copy(p.x.data().begin(), p.x.data().end(), out.train.x.data().begin() +
                                                            static_cast<std::ptrdiff_t>(at * 3072));
        out.train.labels.insert(out.train.labels.end(), p.labels.begin(), p.labels.end());
        at += p.size();
      }
      const auto tp = (dir / "test_batch.bin").string();
      out.test = parse_cifar10_batch(read_file(tp), tp);
      break;
    }
    case DatasetSource::kSyntheticBlobs:
    case DatasetSource::kSyntheticMoons: {
      Dataset all = spec.source == DatasetSource::kSyntheticBlobs
                        ? synthetic_blobs(spec.n, spec.classes, spec.dim, spec.seed)
                        : synthetic_moons(spec.n, spec.noise, spec.seed);
      out.test = split_tail(all, spec.test_fraction);
      out.train = std::move(all);
      return out;
    }
  }
  out.train = out.train.head(spec.train_limit);
  out.test = out.test.head(spec.test_limit);
  normalize(out.train.x, spec.mean, spec.stddev);
  normalize(out.test.x, spec.mean, spec.stddev);
  return out;
}

}  // namespace pann
