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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/network.hpp"

namespace pann {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(const std::string& in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) {
    fail(ErrorCode::kParse, "checkpoint truncated at byte " + std::to_string(pos) + ": need " +
                                std::to_string(bytes) + " more bytes, file has " +
                                std::to_string(in.size()));
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)]))
         << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

nlohmann::json layer_header(const Layer& layer) {
  using nlohmann::json;
  json j{{"type", layer_name(layer)}};
  if (const auto* d = std::get_if<Dense>(&layer)) {
    j["weight"] = d->weight.shape();
  } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
    j["kernel"] = c->kernel.shape();
    j["padding"] = c->padding == Padding::kSame ? "same" : "valid";
  } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
    j["mode"] = to_json(a->mode);
  } else if (const auto* p = std::get_if<AvgPool>(&layer)) {
    j["window"] = p->window;
  }
  return j;
}

Layer layer_from_header(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "dense") {
    const auto w = j.at("weight").get<Shape>();
    if (w.size() != 2) fail(ErrorCode::kParse, "checkpoint: dense weight must be rank 2");
    return Dense{Tensor(w), Tensor({w[0]})};
  }
  if (type == "conv2d") {
    const auto k = j.at("kernel").get<Shape>();
    if (k.size() != 4) fail(ErrorCode::kParse, "checkpoint: conv kernel must be rank 4");
    const Padding pad = j.value("padding", std::string("valid")) == "same" ? Padding::kSame
                                                                            : Padding::kValid;
    return Conv2d{Tensor(k), Tensor({k[0]}), pad};
  }
  if (type == "activation") return ActivationLayer{activation_from_json(j.at("mode"))};
  if (type == "flatten") return Flatten{};
  if (type == "avgpool") return AvgPool{j.at("window").get<std::size_t>()};
  fail(ErrorCode::kParse, "checkpoint: unknown layer type '" + type + "'");
}

}  // namespace

std::string serialize_checkpoint(const Network& net) {
  nlohmann::json header{{"input_shape", net.input_shape()},
                        {"classes", net.classes()},
                        {"layers", nlohmann::json::array()},
                        {"metadata", net.metadata}};
  for (const auto& layer : net.layers()) header["layers"].push_back(layer_header(layer));
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le(out, kVersion, 4);
  put_le(out, text.size(), 8);
  out += text;
  out.reserve(out.size() + 8 * net.parameter_count());
  for (const Tensor* t : net.parameters())
    for (double v : t->data()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

Network deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorCode::kParse, "checkpoint: bad magic at byte 0");
  std::size_t pos = sizeof kMagic;
  const auto version = get_le(bytes, pos, 4);
  if (version != kVersion)
    fail(ErrorCode::kParse, "checkpoint: unsupported version " + std::to_string(version));
  const auto len = get_le(bytes, pos, 8);
  if (len > bytes.size() - pos)
    fail(ErrorCode::kParse, "checkpoint: header length " + std::to_string(len) +
                                " runs past the end of the file at byte " + std::to_string(pos));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  pos += len;

  std::vector<Layer> layers;
  Shape input_shape;
  std::size_t classes = 0;
  try {
    for (const auto& l : header.at("layers")) layers.push_back(layer_from_header(l));
    input_shape = header.at("input_shape").get<Shape>();
    classes = header.at("classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  Network net(std::move(input_shape), classes, std::move(layers));
  net.metadata = header.value("metadata", nlohmann::json::object());

  const std::size_t expected = 8 * net.parameter_count();
  if (bytes.size() - pos != expected) {
    fail(ErrorCode::kParse, "checkpoint: payload at byte " + std::to_string(pos) + " holds " +
                                std::to_string(bytes.size() - pos) + " bytes, expected " +
                                std::to_string(expected));
  }
  for (Tensor* t : net.parameters())
    for (double& v : t->data()) v = std::bit_cast<double>(get_le(bytes, pos, 8));
  return net;
}

void save_checkpoint(const Network& net, const std::string& path) {
  const std::string bytes = serialize_checkpoint(net);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

Network load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace pann
