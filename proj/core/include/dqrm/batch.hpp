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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dqrm {

// One preprocessed sample: transformed dense features, one categorical index
// per table, and a 0/1 label.
struct Example {
  std::vector<float> dense;
  std::vector<uint32_t> sparse;
  float label = 0.0f;

  friend bool operator==(const Example&, const Example&) = default;
};

// Column-major-by-table minibatch. Per-table lookups use CSR offsets with
// size() + 1 entries, so multi-hot bags are representable.
struct Batch {
  std::size_t dense_dim = 0;
  std::vector<float> dense;                     // size() x dense_dim
  std::vector<std::vector<uint32_t>> indices;   // per table
  std::vector<std::vector<uint32_t>> offsets;   // per table, size() + 1
  std::vector<float> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t num_tables() const { return indices.size(); }

  // Rows [begin, end) as a standalone batch with rebased offsets.
  Batch slice(std::size_t begin, std::size_t end) const;

  // Throws Error(kIndexOutOfRange / kInvalidArgument) on inconsistent
  // shapes, non-monotone offsets, or indices outside the table sizes.
  void validate(std::span<const std::size_t> table_rows) const;
};

Batch make_batch(std::span<const Example> examples);

// Consecutive batches in stream order. The last short batch is kept unless
// drop_last is set.
std::vector<Batch> make_batches(std::span<const Example> examples,
                                std::size_t batch_size, bool drop_last);

// Single-hot batches back to examples (inverse of make_batches).
std::vector<Example> unbatch(std::span<const Batch> batches);

}  // namespace dqrm
