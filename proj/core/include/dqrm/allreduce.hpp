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
#include <optional>
#include <span>
#include <vector>

#include "dqrm/error_feedback.hpp"
#include "dqrm/quantizer.hpp"
#include "dqrm/sparse_gradient.hpp"

namespace dqrm {

struct DpConfig {
  std::size_t nodes = 1;
  int grad_bits = 32;  // 8, 16 or 32 (32 = unquantized)
  EcMode ec = EcMode::kMlp;
  bool sparse_emb = true;
  std::size_t index_bytes = 8;  // 4 or 8

  // Errors: kConfig.
  void validate() const;
  bool quantized() const { return grad_bits < 32; }
  int qmax() const { return (1 << (grad_bits - 1)) - 1; }
};

// Local gradient scale max|v| / qmax, or nullopt for an empty or all-zero
// tensor (such a node has nothing to represent and must not shrink the
// shared range). Errors: kNonFinite.
std::optional<Scale> local_grad_scale(std::span<const float> values, int bits);

// Phase one: max over nodes. Absent scales are skipped; if every node is
// absent the result is 1 / qmax.
Scale unify_scales(std::span<const Scale> local);
Scale unify_scales(std::span<const std::optional<Scale>> local, int bits);

// Codes in [-qmax, qmax]. Returns how many elements would have needed
// clamping, which the max-unified scale makes zero for the tensors it was
// computed from.
std::size_t quantize_grad(std::span<const float> values, Scale s, int bits,
                          std::span<int32_t> codes);

// Phase two. Sums run in ascending rank order.
void allreduce_sum_dense(std::span<const std::vector<int32_t>> codes,
                         std::span<int64_t> sums);
void allreduce_sum_dense(std::span<const std::vector<float>> values,
                         std::span<float> sums);

// Union of indices; colliding rows are summed in ascending rank order,
// starting from zero.
template <typename T>
SparseGradient<T> allreduce_union_sparse(std::span<const SparseGradient<T>> parts);

// g = sums * s / n
void dequant_average(std::span<const int64_t> sums, Scale s, std::size_t n,
                     std::span<float> out);
void average(std::span<const float> sums, std::size_t n, std::span<float> out);

}  // namespace dqrm
