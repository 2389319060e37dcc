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

#include "dqrm/batch.hpp"
#include "dqrm/dense_layer.hpp"
#include "dqrm/embedding.hpp"
#include "dqrm/quantizer.hpp"
#include "dqrm/sparse_gradient.hpp"

namespace dqrm {

// Bit-width 32 means "not quantized" for every *_bits field.
inline constexpr int kFullPrecisionBits = 32;

struct ModelConfig {
  std::size_t dense_in = 13;
  std::size_t num_tables = 26;
  std::vector<std::size_t> table_rows;
  std::size_t embed_dim = 16;
  // Includes the input width; must end at embed_dim.
  std::vector<std::size_t> bottom_arch{13, 512, 256, 64, 16};
  // Excludes the input width (derived), must end at 1.
  std::vector<std::size_t> top_arch{512, 256, 1};
  int emb_bits = 4;
  int mlp_bits = 4;
  Granularity mlp_granularity = Granularity::kPerChannel;
  int act_bits = kFullPrecisionBits;
  int period = 1;
  double lr = 0.1;
  int pretrain_epochs = 0;

  // Throws Error(kConfig) on inconsistent shapes or unsupported bit-widths.
  void validate() const;

  bool qat_from_scratch() const { return pretrain_epochs == 0; }
  std::size_t num_vectors() const { return num_tables + 1; }
  std::size_t top_input() const;
  std::size_t num_layers() const {
    return bottom_arch.size() - 1 + top_arch.size();
  }
  std::size_t dense_param_count() const;
  std::size_t embedding_param_count() const;

  std::optional<QuantSpec> emb_quant() const;
  std::optional<QuantSpec> mlp_quant() const;
  std::optional<QuantSpec> act_quant() const;
};

// Criteo Kaggle table cardinalities as produced by the reference DLRM
// preprocessing (26 tables, largest 10,131,227 rows).
std::vector<std::size_t> kaggle_table_rows();
ModelConfig kaggle_config();

template <typename Real>
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<LayerCache<Real>> bottom;
  std::vector<LayerCache<Real>> top;
  std::vector<std::vector<Real>> pooled;  // per table, batch x d
  std::vector<Real> logits;
};

template <typename Real>
struct Gradients {
  std::vector<LayerGrad<Real>> bottom;
  std::vector<LayerGrad<Real>> top;
  std::vector<SparseGradient<Real>> tables;
  double loss = 0.0;
};

// Mean binary cross-entropy over sigmoid(logit) with p clamped to
// [1e-7, 1 - 1e-7] inside the log; dlogits = (sigmoid(logit) - y) / B.
// Throws Error(kDiverged) on a non-finite loss.
template <typename Real>
double bce_loss(std::span<const Real> logits, std::span<const float> labels,
                std::span<Real> dlogits);

template <typename Real>
Real sigmoid(Real x);

template <typename Real>
class Model {
 public:
  explicit Model(const ModelConfig& config);

  // Embedding tables uniform(+-1/sqrt(R)); MLPs normal(0, sqrt(2/(in+out))).
  void init(uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<EmbeddingTable<Real>>& tables() { return tables_; }
  const std::vector<EmbeddingTable<Real>>& tables() const { return tables_; }
  std::vector<DenseLayer<Real>>& bottom() { return bottom_; }
  const std::vector<DenseLayer<Real>>& bottom() const { return bottom_; }
  std::vector<DenseLayer<Real>>& top() { return top_; }
  const std::vector<DenseLayer<Real>>& top() const { return top_; }

  // Bottom layers first, then top layers.
  DenseLayer<Real>& layer(std::size_t i);
  const DenseLayer<Real>& layer(std::size_t i) const;
  std::size_t num_layers() const { return bottom_.size() + top_.size(); }

  // Dense parameter tensors in canonical order: layer 0 weight, layer 0 bias,
  // layer 1 weight, ...
  std::size_t num_dense_tensors() const { return 2 * num_layers(); }
  std::span<Real> dense_tensor(std::size_t k);
  std::span<const Real> dense_tensor(std::size_t k) const;
  static std::span<Real> grad_tensor(Gradients<Real>& grads, std::size_t k);
  static std::span<const Real> grad_tensor(const Gradients<Real>& grads,
                                           std::size_t k);

  void set_quantization_enabled(bool enabled);
  bool quantization_enabled() const { return quant_enabled_; }

  // Periodic scale refresh for every table and layer; returns how many were
  // recomputed.
  int update_scales(int64_t iter);

  // Training forward: refreshes scales for `iter`, then runs the network.
  std::span<const Real> forward(const Batch& batch, int64_t iter,
                                ForwardCache<Real>& cache);
  // Inference with the current (frozen) scales. Const; safe to run
  // concurrently with other readers.
  std::vector<Real> predict(const Batch& batch) const;
  void run_forward(const Batch& batch, ForwardCache<Real>& cache) const;

  Gradients<Real> loss_and_backward(const Batch& batch,
                                    const ForwardCache<Real>& cache) const;

  void apply_gradients(const Gradients<Real>& grads, Real lr);

  // FNV-1a over every parameter and scale byte.
  uint64_t checksum() const;

 private:
  ModelConfig config_;
  std::vector<EmbeddingTable<Real>> tables_;
  std::vector<DenseLayer<Real>> bottom_;
  std::vector<DenseLayer<Real>> top_;
  bool quant_enabled_ = true;
};

}  // namespace dqrm
