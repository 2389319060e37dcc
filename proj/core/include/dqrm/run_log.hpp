// Copyright 2026 The DQRM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace dqrm {

// Metrics log: UTF-8, one JSON object per line, keys in insertion order.
//
//   {"kind":"header","schema":1,"config":{...}}
//   {"kind":"train","iter":..,"epoch":..,"train_loss":..}
//   {"kind":"eval","iter":..,"epoch":..,"split":"test","loss":..,"acc":..,"auc":..}
//   {"kind":"scale_update","iter":..,"tensors":..,"scale_bytes":..}
//   {"kind":"comm","iter":..,"dense_grad_bytes":..,"sparse_index_bytes":..,
//    "sparse_value_bytes":..,"scale_bytes":..,"total_bytes":..}
//   {"kind":"summary","iter":..,...}
//
// An undefined metric (e.g. AUC on a one-class split) is written as null.
inline constexpr int kLogSchema = 1;

enum class RecordKind { kHeader, kTrain, kEval, kScaleUpdate, kComm, kSummary };

std::string_view to_string(RecordKind kind);
// Errors: Error(kUnknownKind).
RecordKind parse_record_kind(std::string_view text);

using LogValue = std::variant<std::monostate, bool, int64_t, double, std::string>;
using LogFields = std::vector<std::pair<std::string, LogValue>>;

struct LogRecord {
  RecordKind kind = RecordKind::kTrain;
  LogFields fields;        // everything except "kind" (and "config")
  LogFields config;        // header only; values are strings
};

std::string format_record(const LogRecord& record);
// Errors: kMalformedRecord for invalid JSON, kUnknownKind.
LogRecord parse_record(std::string_view line);

class RunLog {
 public:
  explicit RunLog(std::ostream& out) : out_(&out) {}

  void header(const std::vector<std::pair<std::string, std::string>>& config);
  // Errors: kUnknownKind for an unknown kind string; kInvalidArgument if
  // "iter" goes backwards.
  void log(std::string_view kind, const LogFields& fields);
  void log(RecordKind kind, const LogFields& fields);

  std::size_t records() const { return records_; }

 private:
  std::ostream* out_;
  std::optional<int64_t> last_iter_;
  std::size_t records_ = 0;
};

std::vector<LogRecord> read_run_log(std::istream& in);

}  // namespace dqrm
