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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqrm/batch.hpp"

namespace dqrm {

inline constexpr std::size_t kCriteoDense = 13;
inline constexpr std::size_t kCriteoCategorical = 26;
inline constexpr std::size_t kCriteoFields = 1 + kCriteoDense + kCriteoCategorical;

// One line of the Criteo display-advertising TSV layout:
// label, 13 integer features, 26 hex categorical features. Empty fields are
// missing values.
struct RawRecord {
  int label = 0;
  std::array<std::optional<int64_t>, kCriteoDense> dense{};
  std::array<std::string, kCriteoCategorical> categorical{};

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// Errors: Error(kMalformedRecord) naming the line number for a wrong field
// count, a label other than 0/1, or a non-integer dense field.
RawRecord parse_criteo_line(std::string_view line, std::size_t line_number);
std::string format_criteo_line(const RawRecord& record);

// ln(1 + max(x, 0)); missing maps to 0.
float dense_transform(std::optional<int64_t> value);
std::vector<float> dense_transform(const RawRecord& record);

// 64-bit FNV-1a over the raw bytes.
uint64_t fnv1a64(std::string_view bytes);
// fnv1a64(field) mod table_rows; a missing (empty) field maps to 0.
uint32_t hash_categorical(std::string_view field, std::size_t table_rows);

// Uses the first table_rows.size() categorical fields.
Example to_example(const RawRecord& record, std::span<const std::size_t> table_rows);

// Reads a Criteo TSV, gzip-compressed or plain. max_records == 0 reads all.
// Errors: kIo if the file cannot be opened, kMalformedRecord on bad lines.
std::vector<Example> read_criteo_file(const std::filesystem::path& path,
                                      std::span<const std::size_t> table_rows,
                                      std::size_t max_records = 0);

void write_criteo_tsv(std::ostream& out, std::span<const RawRecord> records);

}  // namespace dqrm
