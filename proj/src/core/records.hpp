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
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace pann {

/// One metric row. `beta` holds the precision parameter (beta or l_x) and is
/// empty where none applies.
struct ExperimentRecord {
  std::string config_hash;
  std::string arch;
  std::string dataset;
  std::string method;
  double wd = 0.0;
  std::size_t epochs = 0;
  std::optional<std::size_t> t_prime;
  std::optional<int> beta;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Fixed column set of every records CSV.
inline constexpr const char* kRecordsHeader =
    "config_hash,arch,dataset,method,wd,epochs,t_prime,beta,seed,metric,value";

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Splits one CSV line honouring quotes.
std::vector<std::string> split_csv_line(const std::string& line);

std::string to_csv_line(const ExperimentRecord& r);
std::string records_to_csv(const std::vector<ExperimentRecord>& rows);
/// Parses a records CSV (header required); throws kParse naming the line.
std::vector<ExperimentRecord> parse_records_csv(const std::string& text);

/// Append-only record store in `dir`: records.csv holds metric rows,
/// manifest.jsonl one line per committed config hash with its timestamp and
/// status. A single mutex serializes writers.
class RecordStore {
 public:
  explicit RecordStore(std::string dir);

  /// True when `hash` was committed with status "ok".
  bool completed(const std::string& hash) const;
  /// Appends the rows, then the manifest line; rows of one commit are
  /// contiguous.
  void commit(const std::string& hash, const std::vector<ExperimentRecord>& rows,
              const nlohmann::json& config, const std::string& status = "ok");

  std::vector<ExperimentRecord> rows() const;
  const std::string& dir() const noexcept { return dir_; }
  std::string csv_path() const;
  std::string manifest_path() const;

 private:
  std::string dir_;
  std::set<std::string> completed_;
  mutable std::mutex mutex_;
};

/// UTC timestamp in ISO-8601 form, second resolution.
std::string utc_timestamp();

}  // namespace pann
