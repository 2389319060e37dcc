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

#include "dqrm/batch.hpp"

#include <string>

#include "dqrm/error.hpp"

namespace dqrm {

Batch Batch::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) {
    throw Error(ErrorCode::kInvalidArgument, "batch slice out of range");
  }
  Batch out;
  out.dense_dim = dense_dim;
  out.dense.assign(dense.begin() + static_cast<std::ptrdiff_t>(begin * dense_dim),
                   dense.begin() + static_cast<std::ptrdiff_t>(end * dense_dim));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(end));
  out.indices.resize(num_tables());
  out.offsets.resize(num_tables());
  for (std::size_t t = 0; t < num_tables(); ++t) {
    const uint32_t lo = offsets[t][begin];
    const uint32_t hi = offsets[t][end];
    out.indices[t].assign(indices[t].begin() + lo, indices[t].begin() + hi);
    out.offsets[t].reserve(end - begin + 1);
    for (std::size_t b = begin; b <= end; ++b) {
      out.offsets[t].push_back(offsets[t][b] - lo);
    }
  }
  return out;
}

void Batch::validate(std::span<const std::size_t> table_rows) const {
  if (dense.size() != size() * dense_dim) {
    throw Error(ErrorCode::kInvalidArgument, "batch dense size mismatch");
  }
  if (table_rows.size() != num_tables() || offsets.size() != num_tables()) {
    throw Error(ErrorCode::kInvalidArgument,
                "batch has " + std::to_string(num_tables()) +
                    " tables, model expects " +
                    std::to_string(table_rows.size()));
  }
  for (std::size_t t = 0; t < num_tables(); ++t) {
    const auto& off = offsets[t];
    if (off.size() != size() + 1 || off.front() != 0 ||
        off.back() != indices[t].size()) {
      throw Error(ErrorCode::kInvalidArgument, "batch offsets malformed");
    }
    for (std::size_t b = 0; b < size(); ++b) {
      if (off[b + 1] < off[b]) {
        throw Error(ErrorCode::kInvalidArgument, "offsets must be monotone");
      }
    }
    for (uint32_t idx : indices[t]) {
      if (idx >= table_rows[t]) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "index out of range: table " + std::to_string(t) +
                        " index " + std::to_string(idx));
      }
    }
  }
}

Batch make_batch(std::span<const Example> examples) {
  Batch batch;
  if (examples.empty()) return batch;
  batch.dense_dim = examples.front().dense.size();
  const std::size_t tables = examples.front().sparse.size();
  batch.indices.resize(tables);
  batch.offsets.assign(tables, std::vector<uint32_t>{0});
  batch.dense.reserve(examples.size() * batch.dense_dim);
  batch.labels.reserve(examples.size());
  for (const Example& ex : examples) {
    if (ex.dense.size() != batch.dense_dim || ex.sparse.size() != tables) {
      throw Error(ErrorCode::kInvalidArgument,
                  "examples in one batch must share a shape");
    }
    batch.dense.insert(batch.dense.end(), ex.dense.begin(), ex.dense.end());
    for (std::size_t t = 0; t < tables; ++t) {
      batch.indices[t].push_back(ex.sparse[t]);
      batch.offsets[t].push_back(static_cast<uint32_t>(batch.indices[t].size()));
    }
    batch.labels.push_back(ex.label);
  }
  return batch;
}

std::vector<Batch> make_batches(std::span<const Example> examples,
                                std::size_t batch_size, bool drop_last) {
  if (batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  }
  std::vector<Batch> out;
  for (std::size_t begin = 0; begin < examples.size(); begin += batch_size) {
    const std::size_t n = std::min(batch_size, examples.size() - begin);
    if (n < batch_size && drop_last) break;
    out.push_back(make_batch(examples.subspan(begin, n)));
  }
  return out;
}

std::vector<Example> unbatch(std::span<const Batch> batches) {
  std::vector<Example> out;
  for (const Batch& batch : batches) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Example ex;
      ex.dense.assign(
          batch.dense.begin() + static_cast<std::ptrdiff_t>(b * batch.dense_dim),
          batch.dense.begin() +
              static_cast<std::ptrdiff_t>((b + 1) * batch.dense_dim));
      for (std::size_t t = 0; t < batch.num_tables(); ++t) {
        const uint32_t lo = batch.offsets[t][b];
        const uint32_t hi = batch.offsets[t][b + 1];
        if (hi != lo + 1) {
          throw Error(ErrorCode::kInvalidArgument,
                      "unbatch expects single-hot lookups");
        }
        ex.sparse.push_back(batch.indices[t][lo]);
      }
      ex.label = batch.labels[b];
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace dqrm
