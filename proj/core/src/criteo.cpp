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

#include "dqrm/criteo.hpp"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <memory>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

[[noreturn]] void malformed(std::size_t line_number, const std::string& why) {
  throw Error(ErrorCode::kMalformedRecord,
              "malformed record at line " + std::to_string(line_number) + ": " + why);
}

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};

}  // namespace

RawRecord parse_criteo_line(std::string_view line, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::array<std::string_view, kCriteoFields> fields;
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (count == kCriteoFields) malformed(line_number, "more than 40 fields");
    fields[count++] = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (count != kCriteoFields) {
    malformed(line_number, "expected 40 fields, got " + std::to_string(count));
  }

  RawRecord rec;
  if (fields[0] == "0") {
    rec.label = 0;
  } else if (fields[0] == "1") {
    rec.label = 1;
  } else {
    malformed(line_number, "label must be 0 or 1");
  }
  for (std::size_t i = 0; i < kCriteoDense; ++i) {
    const std::string_view f = fields[1 + i];
    if (f.empty()) continue;
    int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      malformed(line_number, "dense field " + std::to_string(i + 1) + " is not an integer");
    }
    rec.dense[i] = v;
  }
  for (std::size_t i = 0; i < kCriteoCategorical; ++i) {
    rec.categorical[i] = std::string(fields[1 + kCriteoDense + i]);
  }
  return rec;
}

std::string format_criteo_line(const RawRecord& record) {
  std::string out = std::to_string(record.label);
  for (const auto& d : record.dense) {
    out += '\t';
    if (d) out += std::to_string(*d);
  }
  for (const auto& c : record.categorical) {
    out += '\t';
    out += c;
  }
  return out;
}

float dense_transform(std::optional<int64_t> value) {
  if (!value) return 0.0f;
  const double x = static_cast<double>(std::max<int64_t>(*value, 0));
  return static_cast<float>(std::log1p(x));
}

std::vector<float> dense_transform(const RawRecord& record) {
  std::vector<float> out(kCriteoDense);
  for (std::size_t i = 0; i < kCriteoDense; ++i) out[i] = dense_transform(record.dense[i]);
  return out;
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint32_t hash_categorical(std::string_view field, std::size_t table_rows) {
  if (table_rows == 0) throw Error(ErrorCode::kInvalidArgument, "table_rows must be > 0");
  if (field.empty()) return 0;
  return static_cast<uint32_t>(fnv1a64(field) % table_rows);
}

Example to_example(const RawRecord& record, std::span<const std::size_t> table_rows) {
  if (table_rows.size() > kCriteoCategorical) {
    throw Error(ErrorCode::kConfig, "Criteo records carry at most 26 categorical features");
  }
  Example ex;
  ex.dense = dense_transform(record);
  ex.sparse.reserve(table_rows.size());
  for (std::size_t t = 0; t < table_rows.size(); ++t) {
    ex.sparse.push_back(hash_categorical(record.categorical[t], table_rows[t]));
  }
  ex.label = static_cast<float>(record.label);
  return ex;
}

std::vector<Example> read_criteo_file(const std::filesystem::path& path,
                                      std::span<const std::size_t> table_rows,
                                      std::size_t max_records) {
  // gzread passes uncompressed input through unchanged.
  std::unique_ptr<gzFile_s, GzCloser> file(gzopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Example> out;
  std::string line;
  std::vector<char> buf(1 << 16);
  std::size_t line_number = 0;
  auto flush = [&] {
    ++line_number;
    if (!line.empty()) out.push_back(to_example(parse_criteo_line(line, line_number), table_rows));
    line.clear();
  };
  while (max_records == 0 || out.size() < max_records) {
    if (gzgets(file.get(), buf.data(), static_cast<int>(buf.size())) == nullptr) break;
    std::string_view chunk(buf.data());
    const bool complete = !chunk.empty() && chunk.back() == '\n';
    if (complete) chunk.remove_suffix(1);
    line.append(chunk);
    if (complete) flush();
  }
  int err = Z_OK;
  gzerror(file.get(), &err);
  if (err != Z_OK && err != Z_STREAM_END) {
    throw Error(ErrorCode::kIo, "read error in " + path.string());
  }
  if (!line.empty() && (max_records == 0 || out.size() < max_records)) flush();
  return out;
}

void write_criteo_tsv(std::ostream& out, std::span<const RawRecord> records) {
  for (const auto& r : records) out << format_criteo_line(r) << '\n';
}

}  // namespace dqrm
