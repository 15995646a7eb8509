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

#include "core/records.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/dataset.hpp"

namespace pann {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string to_csv_line(const ExperimentRecord& r) {
  std::string s;
  s += csv_field(r.config_hash) + ',';
  s += csv_field(r.arch) + ',';
  s += csv_field(r.dataset) + ',';
  s += csv_field(r.method) + ',';
  s += format_double(r.wd) + ',';
  s += std::to_string(r.epochs) + ',';
  s += (r.t_prime ? std::to_string(*r.t_prime) : std::string()) + ',';
  s += (r.beta ? std::to_string(*r.beta) : std::string()) + ',';
  s += std::to_string(r.seed) + ',';
  s += csv_field(r.metric) + ',';
  s += format_double(r.value);
  return s;
}

std::string records_to_csv(const std::vector<ExperimentRecord>& rows) {
  std::string out = std::string(kRecordsHeader) + '\n';
  for (const auto& r : rows) out += to_csv_line(r) + '\n';
  return out;
}

namespace {

template <class T>
T parse_number(const std::string& s, std::size_t line, const char* column) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(ErrorCode::kParse, "records line " + std::to_string(line) + ": column " + column +
                                " is not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<ExperimentRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  std::vector<ExperimentRecord> rows;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1) {
      require(line == kRecordsHeader, ErrorCode::kParse,
              "records line 1: unexpected header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == 11, ErrorCode::kParse,
            "records line " + std::to_string(n) + ": expected 11 columns, found " +
                std::to_string(f.size()));
    ExperimentRecord r;
    r.config_hash = f[0];
    r.arch = f[1];
    r.dataset = f[2];
    r.method = f[3];
    r.wd = parse_number<double>(f[4], n, "wd");
    r.epochs = parse_number<std::size_t>(f[5], n, "epochs");
    if (!f[6].empty()) r.t_prime = parse_number<std::size_t>(f[6], n, "t_prime");
    if (!f[7].empty()) r.beta = parse_number<int>(f[7], n, "beta");
    r.seed = parse_number<std::uint64_t>(f[8], n, "seed");
    r.metric = f[9];
    r.value = parse_number<double>(f[10], n, "value");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RecordStore::RecordStore(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  require(!ec, ErrorCode::kIo, "cannot create output directory " + dir_ + ": " + ec.message());
  if (!fs::exists(csv_path())) {
    std::ofstream(csv_path(), std::ios::binary) << kRecordsHeader << '\n';
  } else {
    parse_records_csv(read_file(csv_path()));
  }
  if (fs::exists(manifest_path())) {
    std::istringstream in(read_file(manifest_path()));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.at("status").get<std::string>() == "ok")
          completed_.insert(j.at("config_hash").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::kParse,
             "manifest line " + std::to_string(n) + ": " + std::string(e.what()));
      }
    }
  }
}

std::string RecordStore::csv_path() const { return (fs::path(dir_) / "records.csv").string(); }

std::string RecordStore::manifest_path() const {
  return (fs::path(dir_) / "manifest.jsonl").string();
}

bool RecordStore::completed(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  return completed_.count(hash) > 0;
}

void RecordStore::commit(const std::string& hash, const std::vector<ExperimentRecord>& rows,
                         const nlohmann::json& config, const std::string& status) {
  std::lock_guard lock(mutex_);
  {
    std::ofstream out(csv_path(), std::ios::binary | std::ios::app);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot append to " + csv_path());
    for (const auto& r : rows) out << to_csv_line(r) << '\n';
  }
  {
    std::ofstream out(manifest_path(), std::ios::binary | std::ios::app);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot append to " + manifest_path());
    const nlohmann::json line{{"config_hash", hash},
                              {"timestamp", utc_timestamp()},
                              {"status", status},
                              {"rows", rows.size()},
                              {"config", config}};
    out << line.dump() << '\n';
  }
  if (status == "ok") completed_.insert(hash);
}

std::vector<ExperimentRecord> RecordStore::rows() const {
  std::lock_guard lock(mutex_);
  return parse_records_csv(read_file(csv_path()));
}

}  // namespace pann
