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

#include "dqrm/allreduce.hpp"

#include <algorithm>
#include <cmath>

#include "dqrm/error.hpp"

namespace dqrm {

void DpConfig::validate() const {
  if (nodes < 1) throw Error(ErrorCode::kConfig, "nodes must be >= 1");
  if (grad_bits != 8 && grad_bits != 16 && grad_bits != 32) {
    throw Error(ErrorCode::kConfig, "grad_bits must be 8, 16 or 32");
  }
  if (index_bytes != 4 && index_bytes != 8) {
    throw Error(ErrorCode::kConfig, "index wire size must be 4 or 8 bytes");
  }
}

std::optional<Scale> local_grad_scale(std::span<const float> values, int bits) {
  if (values.empty()) return std::nullopt;
  float m = 0.0f;
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite gradient");
    m = std::max(m, std::fabs(v));
  }
  if (m == 0.0f) return std::nullopt;
  QuantSpec spec;
  spec.bits = bits;
  spec.granularity = Granularity::kPerTensor;
  return compute_scale<float>(values, spec);
}

Scale unify_scales(std::span<const Scale> local) {
  if (local.empty()) throw Error(ErrorCode::kInvalidArgument, "no scales to unify");
  Scale s = local.front();
  for (const Scale& x : local) s.value = std::max(s.value, x.value);
  return s;
}

Scale unify_scales(std::span<const std::optional<Scale>> local, int bits) {
  std::optional<Scale> best;
  for (const auto& x : local) {
    if (x && (!best || x->value > best->value)) best = x;
  }
  if (best) return *best;
  return Scale{1.0f / static_cast<float>((1 << (bits - 1)) - 1)};
}

std::size_t quantize_grad(std::span<const float> values, Scale s, int bits,
                          std::span<int32_t> codes) {
  if (codes.size() != values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "code buffer size mismatch");
  }
  const int qmax = (1 << (bits - 1)) - 1;
  const float hi = static_cast<float>(qmax);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float r = std::round(values[i] / s.value);
    if (r > hi || r < -hi) ++clipped;
    codes[i] = quantize_value(values[i], s, qmax);
  }
  return clipped;
}

void allreduce_sum_dense(std::span<const std::vector<int32_t>> codes,
                         std::span<int64_t> sums) {
  std::fill(sums.begin(), sums.end(), int64_t{0});
  for (const auto& node : codes) {
    if (node.size() != sums.size()) throw Error(ErrorCode::kShapeMismatch, "allreduce size mismatch");
    for (std::size_t i = 0; i < node.size(); ++i) sums[i] += node[i];
  }
}

void allreduce_sum_dense(std::span<const std::vector<float>> values,
                         std::span<float> sums) {
  std::fill(sums.begin(), sums.end(), 0.0f);
  for (const auto& node : values) {
    if (node.size() != sums.size()) throw Error(ErrorCode::kShapeMismatch, "allreduce size mismatch");
    for (std::size_t i = 0; i < node.size(); ++i) sums[i] += node[i];
  }
}

template <typename T>
SparseGradient<T> allreduce_union_sparse(std::span<const SparseGradient<T>> parts) {
  SparseGradient<T> out;
  if (parts.empty()) return out;
  out.table = parts.front().table;
  out.dim = parts.front().dim;
  for (const auto& p : parts) {
    if (p.dim != out.dim || p.table != out.table) {
      throw Error(ErrorCode::kShapeMismatch, "sparse allreduce: mismatched tables");
    }
    p.validate();
    out.indices.insert(out.indices.end(), p.indices.begin(), p.indices.end());
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  out.values.assign(out.indices.size() * out.dim, T{0});
  for (const auto& p : parts) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < p.indices.size(); ++i) {
      while (out.indices[pos] != p.indices[i]) ++pos;
      T* dst = out.values.data() + pos * out.dim;
      const T* src = p.values.data() + i * out.dim;
      for (std::size_t j = 0; j < out.dim; ++j) dst[j] += src[j];
    }
  }
  return out;
}

template SparseGradient<float> allreduce_union_sparse<float>(
    std::span<const SparseGradient<float>>);
template SparseGradient<int64_t> allreduce_union_sparse<int64_t>(
    std::span<const SparseGradient<int64_t>>);

void dequant_average(std::span<const int64_t> sums, Scale s, std::size_t n,
                     std::span<float> out) {
  if (out.size() != sums.size()) throw Error(ErrorCode::kShapeMismatch, "output size mismatch");
  const double k = static_cast<double>(s.value) / static_cast<double>(n);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(sums[i]) * k);
  }
}

void average(std::span<const float> sums, std::size_t n, std::span<float> out) {
  if (out.size() != sums.size()) throw Error(ErrorCode::kShapeMismatch, "output size mismatch");
  const float fn = static_cast<float>(n);
  for (std::size_t i = 0; i < sums.size(); ++i) out[i] = sums[i] / fn;
}

}  // namespace dqrm
