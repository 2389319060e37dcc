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

// Row-sparse gradient of one embedding table: strictly increasing row ids
// and one dim-wide value row per id.
template <typename Real>
struct SparseGradient {
  uint32_t table = 0;
  std::size_t dim = 0;
  std::vector<uint32_t> indices;
  std::vector<Real> values;

  std::size_t num_rows() const { return indices.size(); }
  std::span<const Real> row(std::size_t i) const {
    return std::span<const Real>(values).subspan(i * dim, dim);
  }
  std::span<Real> row(std::size_t i) {
    return std::span<Real>(values).subspan(i * dim, dim);
  }

  // Throws Error(kInvalidArgument) if indices are unsorted/duplicated or the
  // value count does not match.
  void validate() const;
};

// Merges per-lookup gradient rows into unique sorted rows. Duplicate rows are
// summed in their original order, so the result depends only on the input
// sequence.
template <typename Real>
SparseGradient<Real> coalesce_sparse(uint32_t table, std::size_t dim,
                                     std::span<const uint32_t> raw_indices,
                                     std::span<const Real> raw_rows);

template <typename Real>
std::vector<Real> scatter_to_dense(const SparseGradient<Real>& grad,
                                   std::size_t rows);

// Inverse of scatter_to_dense: keeps only rows with at least one nonzero.
template <typename Real>
SparseGradient<Real> sparse_from_dense(uint32_t table, std::size_t dim,
                                       std::span<const Real> dense);

}  // namespace dqrm
