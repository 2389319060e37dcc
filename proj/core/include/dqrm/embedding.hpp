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

#include "dqrm/quantizer.hpp"
#include "dqrm/rng.hpp"
#include "dqrm/sparse_gradient.hpp"

namespace dqrm {

// An embedding bag with per-table quantization-aware training state.
//
// The master weights stay in full precision. Quantization happens only on the
// rows a batch actually references, using a single per-table scale that is
// refreshed from a full-table traversal every `update_period` iterations and
// frozen in between.
template <typename Real>
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t rows, std::size_t dim,
                 std::optional<QuantSpec> quant);

  // uniform(-1/sqrt(R), +1/sqrt(R))
  void init_uniform(Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const Real> weights() const { return weights_; }
  std::span<Real> mutable_weights() { return weights_; }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(weights_).subspan(r * dim_, dim_);
  }

  const std::optional<QuantSpec>& quant_spec() const { return quant_; }
  bool quantization_active() const { return quant_.has_value() && enabled_; }
  // Turning quantization back on drops the frozen scale so the next
  // maybe_update_scale recomputes it.
  void set_quantization_enabled(bool enabled);

  const std::optional<Scale>& scale() const { return scale_; }
  int64_t scale_iter() const { return scale_iter_; }
  void set_scale(Scale s, int64_t iter);

  // Recomputes the scale over the whole table when iter % P == 0 (or when no
  // scale exists yet). Returns whether an update happened.
  bool maybe_update_scale(int64_t iter);

  // Sum-pooled lookup. `offsets` has B + 1 entries in CSR form; `out` is
  // B x dim. Only referenced rows are fake-quantized.
  void forward(std::span<const uint32_t> indices,
               std::span<const uint32_t> offsets, std::span<Real> out) const;

  // The row as seen by the forward pass (fake-quantized when active).
  void effective_row(std::size_t r, std::span<Real> out) const;

  void apply_sparse_sgd(const SparseGradient<Real>& grad, Real lr);
  void apply_dense_sgd(std::span<const Real> grad, Real lr);

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<Real> weights_;
  std::optional<QuantSpec> quant_;
  bool enabled_ = true;
  std::optional<Scale> scale_;
  int64_t scale_iter_ = -1;
};

}  // namespace dqrm
