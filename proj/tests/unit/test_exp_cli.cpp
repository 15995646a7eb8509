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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/commands.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/records.hpp"

using namespace pann;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("pann_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
          static_cast<char>(v)};
}

const nlohmann::json kBlobs = {
    {"source", "synthetic_blobs"}, {"n", 300}, {"classes", 2}, {"dim", 2}, {"seed", 1}};

nlohmann::json model_section() {
  return {{"arch", {{"type", "mlp"}, {"hidden", {8}}}},
          {"train", {{"epochs", 3}, {"batch_size", 32}, {"lr", 0.05}}},
          {"seeds", {1, 2}}};
}

RunOptions opts(const TempDir& d) {
  RunOptions o;
  o.out_dir = d.str();
  return o;
}

}  // namespace

TEST_CASE("synthetic blobs honour the generator contract") {
  const auto d = synthetic_blobs(100, 2, 2, 1);
  CHECK(d.size() == 100);
  CHECK(d.x.shape() == Shape{100, 2});
  std::size_t ones = 0;
  for (int l : d.labels) ones += l == 1;
  CHECK(ones == 50);
  CHECK(synthetic_blobs(100, 2, 2, 1).x == d.x);
}

TEST_CASE("IDX parsing: valid, truncated and bad magic") {
  std::string img = be32(0x00000803) + be32(2) + be32(2) + be32(2) + std::string(8, '\x7f');
  const auto t = parse_idx_images(img, "img");
  CHECK(t.shape() == Shape{2, 1, 2, 2});
  CHECK(t[0] == doctest::Approx(127.0 / 255.0));

  const std::string cut = img.substr(0, img.size() - 3);
  try {
    parse_idx_images(cut, "img");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    const std::string msg = e.what();
    CHECK(msg.find("expected") != std::string::npos);
    CHECK(msg.find("expected 24 bytes") != std::string::npos);
    CHECK(msg.find("got 21") != std::string::npos);
  }
  img[3] = '\x01';
  CHECK_THROWS_AS(parse_idx_images(img, "img"), Error);

  const std::string lab = be32(0x00000801) + be32(3) + std::string("\x01\x02\x0b", 3);
  try {
    parse_idx_labels(lab, "lab");
    FAIL("expected label range error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("CIFAR-10 records must be 3073 bytes") {
  std::string rec(3073, '\0');
  rec[0] = 4;
  const auto d = parse_cifar10_batch(rec + rec, "cifar");
  CHECK(d.size() == 2);
  CHECK(d.x.shape() == Shape{2, 3, 32, 32});
  CHECK(d.labels[1] == 4);
  CHECK_THROWS_AS(parse_cifar10_batch(rec + "x", "cifar"), Error);
}

TEST_CASE("MNIST test split has 10000 samples of 28x28") {
  const fs::path dir = default_data_dir();
  if (!fs::exists(dir / "t10k-images-idx3-ubyte")) {
    MESSAGE("MNIST files not found under " << dir << "; skipped");
    return;
  }
  DatasetSpec s;
  s.source = DatasetSource::kMnistIdx;
  s.train_limit = 10;
  const auto split = load_dataset(s);
  CHECK(split.test.size() == 10000);
  CHECK(split.test.sample_shape() == Shape{1, 28, 28});
  CHECK(split.train.size() == 10);
  for (int l : split.test.labels) REQUIRE((l >= 0 && l < 10));
}

TEST_CASE("records CSV round trip") {
  ExperimentRecord r;
  r.config_hash = "0123456789abcdef";
  r.arch = "mlp-8";
  r.dataset = "synthetic_blobs";
  r.method = "mixup+ngnv";
  r.wd = 1e-3;
  r.epochs = 20;
  r.t_prime = 4;
  r.beta = 6;
  r.seed = 3;
  r.metric = "pann_accuracy";
  r.value = 0.1 + 0.2;
  ExperimentRecord q = r;
  q.arch = "has,comma \"quoted\"";
  q.t_prime.reset();
  q.beta.reset();
  const std::string csv = records_to_csv({r, q});
  CHECK(csv.rfind(std::string(kRecordsHeader) + "\n", 0) == 0);
  const auto back = parse_records_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].value == r.value);
  CHECK(back[0].t_prime == r.t_prime);
  CHECK(back[1].arch == q.arch);
  CHECK_FALSE(back[1].beta.has_value());
  CHECK(records_to_csv(back) == csv);
  CHECK_THROWS_AS(parse_records_csv(std::string(kRecordsHeader) + "\nx,y\n"), Error);
}

TEST_CASE("shortest round-trip formatting of doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("record store commits and remembers hashes") {
  TempDir d("store");
  {
    RecordStore s(d.str());
    CHECK_FALSE(s.completed("aa"));
    ExperimentRecord r;
    r.config_hash = "aa";
    r.metric = "m";
    s.commit("aa", {r}, nlohmann::json{{"k", 1}});
  }
  RecordStore again(d.str());
  CHECK(again.completed("aa"));
  CHECK(again.rows().size() == 1);
  std::ifstream manifest(d.path / "manifest.jsonl");
  std::string line;
  std::getline(manifest, line);
  CHECK(nlohmann::json::parse(line).contains("timestamp"));
}

TEST_CASE("validate-theorems exits 0 with every check passing") {
  TempDir d("theorems");
  const auto r = run_command("validate-theorems", {}, opts(d));
  CHECK(r.exit_status == 0);
  CHECK(r.report.at("pass").get<bool>());
  CHECK(fs::exists(d.path / "validate-theorems_report.json"));
}

TEST_CASE("re-running a config adds no rows unless forced") {
  TempDir d("idem");
  nlohmann::json c = model_section();
  c["dataset"] = kBlobs;
  c["mode"] = {{"mode", "injected"}, {"beta", 6}};
  const auto first = run_command("eval-pann", c, opts(d));
  CHECK(first.new_rows == 8);
  const auto second = run_command("eval-pann", c, opts(d));
  CHECK(second.skipped);
  CHECK(second.new_rows == 0);
  auto forced = opts(d);
  forced.force = true;
  CHECK(run_command("eval-pann", c, forced).new_rows == 8);
}

TEST_CASE("eval-pann with exact ReLU reports the backbone accuracy exactly") {
  TempDir d("exact");
  nlohmann::json c = model_section();
  c["dataset"] = kBlobs;
  c["mode"] = {{"mode", "exact_relu"}};
  const auto r = run_command("eval-pann", c, opts(d));
  for (const auto& m : r.report.at("models"))
    CHECK(m.at("pann_accuracy").get<double>() == m.at("backbone_accuracy").get<double>());
}

TEST_CASE("sweep-beta emits one PANN row per beta and seed, weakly increasing in beta") {
  TempDir d("beta");
  nlohmann::json c = model_section();
  c["dataset"] = kBlobs;
  c["dataset"]["n"] = 2000;
  const auto r = run_command("sweep-beta", c, opts(d));
  RecordStore s(d.str());
  std::size_t pann_rows = 0;
  for (const auto& row : s.rows()) pann_rows += row.metric == "pann_accuracy";
  CHECK(pann_rows == 7 * 2);
  CHECK(r.report.at("monotonicity_violations").get<std::size_t>() == 0);
}

TEST_CASE("identical runs write byte-identical metric CSVs") {
  TempDir a("det_a"), b("det_b");
  nlohmann::json c = model_section();
  c["dataset"] = kBlobs;
  c["lx"] = {6, 8};
  run_command("trunc-sweep", c, opts(a));
  run_command("trunc-sweep", c, opts(b));
  CHECK(read_file((a.path / "records.csv").string()) == read_file((b.path / "records.csv").string()));
  CHECK(read_file((a.path / "trunc-sweep_plot.csv").string()) ==
        read_file((b.path / "trunc-sweep_plot.csv").string()));
}

TEST_CASE("model cache location and worker count stay out of the config hash") {
  TempDir a("cache_a"), b("cache_b");
  nlohmann::json c = model_section();
  c["dataset"] = kBlobs;
  c["lx"] = {8};
  c["model_cache"] = (a.path / "models").string();
  run_command("trunc-sweep", c, opts(a));
  c["model_cache"] = (b.path / "models").string();
  run_command("trunc-sweep", c, opts(b));
  CHECK(read_file((a.path / "records.csv").string()) == read_file((b.path / "records.csv").string()));
  // Same identity in one store: the second config is recognized as done.
  CHECK(run_command("trunc-sweep", c, opts(a)).skipped);
}

TEST_CASE("config diagnostics name the line, column or field") {
  try {
    parse_config_text("{\n  \"command\": \"train\",\n  oops\n}", "cfg.json");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cfg.json:3:") != std::string::npos);
  }
  TempDir d("schema");
  try {
    run_command("validate-theorems", {{"bogus", 1}}, opts(d));
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  try {
    run_command("attack", {{"toy", {{"beta", 4}, {"extra", 1}}}}, opts(d));
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("toy.extra") != std::string::npos);
  }
  CHECK_THROWS_AS(run_command("no-such-command", {}, opts(d)), Error);
}

TEST_CASE("run_config_file dispatches on the command field") {
  TempDir d("file");
  const auto path = d.path / "c.json";
  std::ofstream(path) << R"({"command": "approx", "beta": 6})";
  const auto r = run_config_file(path.string(), opts(d));
  CHECK(r.exit_status == 0);
  CHECK(r.report.at("certified").get<bool>());
  std::ofstream(path) << R"({"beta": 6})";
  CHECK_THROWS_AS(run_config_file(path.string(), opts(d)), Error);
}

TEST_CASE("every documented command is registered") {
  const auto& names = command_names();
  for (const char* n : {"train", "transform", "eval-pann", "sweep-wd", "sweep-beta", "trunc-sweep",
                        "perturb-exp", "validate-theorems", "attack", "approx"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
}
