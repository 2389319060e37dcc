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

#include "dqrm/sparse_gradient.hpp"

#include <algorithm>
#include <numeric>

#include "dqrm/error.hpp"

namespace dqrm {

template <typename Real>
void SparseGradient<Real>::validate() const {
  if (values.size() != indices.size() * dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "sparse gradient: value count != indices * dim");
  }
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sparse gradient: indices not strictly increasing");
    }
  }
}

template <typename Real>
SparseGradient<Real> coalesce_sparse(uint32_t table, std::size_t dim,
                                     std::span<const uint32_t> raw_indices,
                                     std::span<const Real> raw_rows) {
  if (raw_rows.size() != raw_indices.size() * dim) {
    throw Error(ErrorCode::kShapeMismatch,
                "coalesce_sparse: row count != index count");
  }
  std::vector<std::size_t> order(raw_indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw_indices[a] < raw_indices[b];
  });

  SparseGradient<Real> out;
  out.table = table;
  out.dim = dim;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t src = order[k];
    const uint32_t idx = raw_indices[src];
    const auto row = raw_rows.subspan(src * dim, dim);
    if (out.indices.empty() || out.indices.back() != idx) {
      out.indices.push_back(idx);
      out.values.insert(out.values.end(), row.begin(), row.end());
    } else {
      Real* acc = out.values.data() + (out.indices.size() - 1) * dim;
      for (std::size_t j = 0; j < dim; ++j) acc[j] += row[j];
    }
  }
  return out;
}

template <typename Real>
std::vector<Real> scatter_to_dense(const SparseGradient<Real>& grad,
                                   std::size_t rows) {
  std::vector<Real> dense(rows * grad.dim, Real{0});
  for (std::size_t i = 0; i < grad.indices.size(); ++i) {
    if (grad.indices[i] >= rows) {
      throw Error(ErrorCode::kIndexOutOfRange, "index out of range");
    }
    std::copy_n(grad.values.begin() + static_cast<std::ptrdiff_t>(i * grad.dim),
                grad.dim,
                dense.begin() +
                    static_cast<std::ptrdiff_t>(grad.indices[i] * grad.dim));
  }
  return dense;
}

template <typename Real>
SparseGradient<Real> sparse_from_dense(uint32_t table, std::size_t dim,
                                       std::span<const Real> dense) {
  SparseGradient<Real> out;
  out.table = table;
  out.dim = dim;
  const std::size_t rows = dim == 0 ? 0 : dense.size() / dim;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = dense.subspan(r * dim, dim);
    if (std::any_of(row.begin(), row.end(), [](Real v) { return v != 0; })) {
      out.indices.push_back(static_cast<uint32_t>(r));
      out.values.insert(out.values.end(), row.begin(), row.end());
    }
  }
  return out;
}

template struct SparseGradient<float>;
template struct SparseGradient<double>;
template struct SparseGradient<int64_t>;
template SparseGradient<float> coalesce_sparse<float>(
    uint32_t, std::size_t, std::span<const uint32_t>, std::span<const float>);
template SparseGradient<double> coalesce_sparse<double>(
    uint32_t, std::size_t, std::span<const uint32_t>, std::span<const double>);
template std::vector<float> scatter_to_dense<float>(
    const SparseGradient<float>&, std::size_t);
template std::vector<double> scatter_to_dense<double>(
    const SparseGradient<double>&, std::size_t);
template std::vector<int64_t> scatter_to_dense<int64_t>(
    const SparseGradient<int64_t>&, std::size_t);
template SparseGradient<float> sparse_from_dense<float>(
    uint32_t, std::size_t, std::span<const float>);
template SparseGradient<double> sparse_from_dense<double>(
    uint32_t, std::size_t, std::span<const double>);

}  // namespace dqrm
