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

#include "dqrm/run_log.hpp"

#include <cmath>
#include <json.hpp>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::pair<RecordKind, std::string_view> kKinds[] = {
    {RecordKind::kHeader, "header"},         {RecordKind::kTrain, "train"},
    {RecordKind::kEval, "eval"},             {RecordKind::kScaleUpdate, "scale_update"},
    {RecordKind::kComm, "comm"},             {RecordKind::kSummary, "summary"},
};

Json to_json(const LogValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) return nullptr;
          return x;
        } else {
          return x;
        }
      },
      v);
}

LogValue from_json(const Json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::kMalformedRecord, "unsupported log value");
}

}  // namespace

std::string_view to_string(RecordKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "train";
}

RecordKind parse_record_kind(std::string_view text) {
  for (const auto& [k, name] : kKinds) {
    if (name == text) return k;
  }
  throw Error(ErrorCode::kUnknownKind, "unknown record kind '" + std::string(text) + "'");
}

std::string format_record(const LogRecord& record) {
  Json j;
  j["kind"] = std::string(to_string(record.kind));
  if (record.kind == RecordKind::kHeader) j["schema"] = kLogSchema;
  for (const auto& [key, value] : record.fields) j[key] = to_json(value);
  if (record.kind == RecordKind::kHeader) {
    Json cfg = Json::object();
    for (const auto& [key, value] : record.config) cfg[key] = to_json(value);
    j["config"] = std::move(cfg);
  }
  return j.dump();
}

LogRecord parse_record(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("bad log line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::kMalformedRecord, "log line without a kind");
  }
  LogRecord rec;
  rec.kind = parse_record_kind(j["kind"].get<std::string>());
  for (const auto& [key, value] : j.items()) {
    if (key == "kind" || (rec.kind == RecordKind::kHeader && key == "schema")) continue;
    if (key == "config" && value.is_object()) {
      for (const auto& [ck, cv] : value.items()) rec.config.emplace_back(ck, from_json(cv));
      continue;
    }
    rec.fields.emplace_back(key, from_json(value));
  }
  return rec;
}

void RunLog::header(const std::vector<std::pair<std::string, std::string>>& config) {
  LogRecord rec;
  rec.kind = RecordKind::kHeader;
  for (const auto& [k, v] : config) rec.config.emplace_back(k, v);
  *out_ << format_record(rec) << '\n';
  ++records_;
}

void RunLog::log(std::string_view kind, const LogFields& fields) {
  log(parse_record_kind(kind), fields);
}

void RunLog::log(RecordKind kind, const LogFields& fields) {
  for (const auto& [key, value] : fields) {
    if (key != "iter") continue;
    const auto* it = std::get_if<int64_t>(&value);
    if (it == nullptr) throw Error(ErrorCode::kInvalidArgument, "iter must be an integer");
    if (last_iter_ && *it < *last_iter_) {
      throw Error(ErrorCode::kInvalidArgument, "iteration numbers must not decrease");
    }
    last_iter_ = *it;
  }
  *out_ << format_record({kind, fields, {}}) << '\n';
  ++records_;
}

std::vector<LogRecord> read_run_log(std::istream& in) {
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_record(line));
  }
  return out;
}

}  // namespace dqrm
