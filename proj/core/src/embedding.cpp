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

#include "dqrm/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dqrm/error.hpp"

namespace dqrm {

template <typename Real>
EmbeddingTable<Real>::EmbeddingTable(std::size_t rows, std::size_t dim,
                                     std::optional<QuantSpec> quant)
    : rows_(rows), dim_(dim), weights_(rows * dim, Real{0}), quant_(quant) {
  if (rows == 0 || dim == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding table needs rows > 0 and dim > 0");
  }
  if (quant_) quant_->validate();
}

template <typename Real>
void EmbeddingTable<Real>::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows_));
  for (auto& w : weights_) w = static_cast<Real>(rng.uniform(-bound, bound));
  scale_.reset();
  scale_iter_ = -1;
}

template <typename Real>
void EmbeddingTable<Real>::set_quantization_enabled(bool enabled) {
  if (enabled && !enabled_) {
    scale_.reset();
    scale_iter_ = -1;
  }
  enabled_ = enabled;
}

template <typename Real>
void EmbeddingTable<Real>::set_scale(Scale s, int64_t iter) {
  if (!(s.value > 0.0f) || !std::isfinite(s.value)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive and finite");
  }
  scale_ = s;
  scale_iter_ = iter;
}

template <typename Real>
bool EmbeddingTable<Real>::maybe_update_scale(int64_t iter) {
  if (!quantization_active()) return false;
  if (iter < 0) throw Error(ErrorCode::kInvalidArgument, "negative iteration");
  if (scale_ && iter % quant_->update_period != 0) return false;
  scale_ = compute_scale<Real>(weights_, *quant_);
  scale_iter_ = iter;
  return true;
}

template <typename Real>
void EmbeddingTable<Real>::effective_row(std::size_t r, std::span<Real> out) const {
  const auto src = row(r);
  if (!quantization_active()) {
    std::copy(src.begin(), src.end(), out.begin());
    return;
  }
  const int qmax = quant_->qmax();
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] = fake_quantize_value(src[j], *scale_, qmax);
  }
}

template <typename Real>
void EmbeddingTable<Real>::forward(std::span<const uint32_t> indices,
                                   std::span<const uint32_t> offsets,
                                   std::span<Real> out) const {
  if (offsets.empty() || offsets.front() != 0 ||
      offsets.back() != indices.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "offsets must start at 0 and end at the index count");
  }
  const std::size_t batch = offsets.size() - 1;
  if (out.size() != batch * dim_) {
    throw Error(ErrorCode::kShapeMismatch, "embedding output size mismatch");
  }
  if (quantization_active() && !scale_) {
    throw Error(ErrorCode::kInvalidArgument,
                "quantization scale not initialized; call maybe_update_scale");
  }
  std::fill(out.begin(), out.end(), Real{0});
  std::vector<Real> scratch(dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    if (offsets[b + 1] < offsets[b]) {
      throw Error(ErrorCode::kInvalidArgument, "offsets must be monotone");
    }
    Real* dst = out.data() + b * dim_;
    for (uint32_t k = offsets[b]; k < offsets[b + 1]; ++k) {
      const uint32_t idx = indices[k];
      if (idx >= rows_) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "index out of range: " + std::to_string(idx) + " >= " +
                        std::to_string(rows_));
      }
      effective_row(idx, scratch);
      for (std::size_t j = 0; j < dim_; ++j) dst[j] += scratch[j];
    }
  }
}

template <typename Real>
void EmbeddingTable<Real>::apply_sparse_sgd(const SparseGradient<Real>& grad,
                                            Real lr) {
  if (grad.dim != dim_) {
    throw Error(ErrorCode::kShapeMismatch, "sparse gradient dim mismatch");
  }
  for (std::size_t i = 0; i < grad.indices.size(); ++i) {
    const uint32_t idx = grad.indices[i];
    if (idx >= rows_) {
      throw Error(ErrorCode::kIndexOutOfRange, "index out of range");
    }
    Real* w = weights_.data() + static_cast<std::size_t>(idx) * dim_;
    const Real* g = grad.values.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) w[j] -= lr * g[j];
  }
}

template <typename Real>
void EmbeddingTable<Real>::apply_dense_sgd(std::span<const Real> grad, Real lr) {
  if (grad.size() != weights_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dense table gradient size mismatch");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] -= lr * grad[i];
}

template class EmbeddingTable<float>;
template class EmbeddingTable<double>;

}  // namespace dqrm
