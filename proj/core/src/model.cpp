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

#include "dqrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "dqrm/error.hpp"
#include "dqrm/interaction.hpp"

namespace dqrm {

namespace {

std::optional<QuantSpec> spec_for(int bits, Granularity g, int period) {
  if (bits == kFullPrecisionBits) return std::nullopt;
  QuantSpec spec{bits, g, period};
  spec.validate();
  return spec;
}

void check_bits(const char* what, int bits) {
  if (bits != kFullPrecisionBits && !is_supported_bits(bits)) {
    throw Error(ErrorCode::kConfig, std::string(what) + " must be one of 2, 4, 8, 16, 32; got " +
                                        std::to_string(bits));
  }
}

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

template <typename T>
void fnv_mix(uint64_t& h, std::span<const T> values) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (num_tables == 0) throw Error(ErrorCode::kConfig, "num_tables must be > 0");
  if (table_rows.size() != num_tables) {
    throw Error(ErrorCode::kConfig,
                "table_rows has " + std::to_string(table_rows.size()) +
                    " entries, expected num_tables = " +
                    std::to_string(num_tables));
  }
  for (std::size_t r : table_rows) {
    if (r == 0) throw Error(ErrorCode::kConfig, "table rows must be > 0");
  }
  if (embed_dim == 0) throw Error(ErrorCode::kConfig, "embed_dim must be > 0");
  if (bottom_arch.size() < 2 || bottom_arch.front() != dense_in ||
      bottom_arch.back() != embed_dim) {
    throw Error(ErrorCode::kConfig,
                "bottom_arch must start at dense_in and end at embed_dim");
  }
  if (top_arch.empty() || top_arch.back() != 1) {
    throw Error(ErrorCode::kConfig, "top_arch must end at 1");
  }
  for (std::size_t w : bottom_arch) {
    if (w == 0) throw Error(ErrorCode::kConfig, "layer widths must be > 0");
  }
  for (std::size_t w : top_arch) {
    if (w == 0) throw Error(ErrorCode::kConfig, "layer widths must be > 0");
  }
  check_bits("emb_bits", emb_bits);
  check_bits("mlp_bits", mlp_bits);
  check_bits("act_bits", act_bits);
  if (period < 1) throw Error(ErrorCode::kConfig, "period must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw Error(ErrorCode::kConfig, "lr must be finite and >= 0");
  }
  if (pretrain_epochs < 0) {
    throw Error(ErrorCode::kConfig, "pretrain_epochs must be >= 0");
  }
  if (mlp_granularity == Granularity::kPerTable) {
    throw Error(ErrorCode::kConfig, "mlp_granularity must be channel or matrix");
  }
}

std::size_t ModelConfig::top_input() const {
  return embed_dim + interaction_pairs(num_vectors());
}

std::size_t ModelConfig::dense_param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < bottom_arch.size(); ++i) {
    n += bottom_arch[i] * bottom_arch[i + 1] + bottom_arch[i + 1];
  }
  std::size_t in = top_input();
  for (std::size_t w : top_arch) {
    n += in * w + w;
    in = w;
  }
  return n;
}

std::size_t ModelConfig::embedding_param_count() const {
  std::size_t n = 0;
  for (std::size_t r : table_rows) n += r * embed_dim;
  return n;
}

std::optional<QuantSpec> ModelConfig::emb_quant() const {
  return spec_for(emb_bits, Granularity::kPerTable, period);
}
std::optional<QuantSpec> ModelConfig::mlp_quant() const {
  return spec_for(mlp_bits, mlp_granularity, period);
}
std::optional<QuantSpec> ModelConfig::act_quant() const {
  return spec_for(act_bits, Granularity::kPerTensor, 1);
}

std::vector<std::size_t> kaggle_table_rows() {
  return {1460,    583,   10131227, 2202608, 305,    24,      12517,
          633,     3,     93145,    5683,    8351593, 3194,   27,
          14992,   5461306, 10,     5652,    2173,    4,      7046547,
          18,      15,    286181,   105,     142572};
}

ModelConfig kaggle_config() {
  ModelConfig cfg;
  cfg.table_rows = kaggle_table_rows();
  return cfg;
}

template <typename Real>
Real sigmoid(Real x) {
  if (x >= 0) {
    const Real e = std::exp(-x);
    return Real{1} / (Real{1} + e);
  }
  const Real e = std::exp(x);
  return e / (Real{1} + e);
}

template <typename Real>
double bce_loss(std::span<const Real> logits, std::span<const float> labels,
                std::span<Real> dlogits) {
  if (logits.size() != labels.size() || dlogits.size() != logits.size()) {
    throw Error(ErrorCode::kShapeMismatch, "loss: logits/labels size mismatch");
  }
  if (logits.empty()) throw Error(ErrorCode::kEmptyTensor, "empty tensor");
  constexpr double kEps = 1e-7;
  const double inv_batch = 1.0 / static_cast<double>(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const Real p = sigmoid(logits[i]);
    const double pc = std::clamp(static_cast<double>(p), kEps, 1.0 - kEps);
    const double y = labels[i];
    total -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    dlogits[i] = static_cast<Real>((p - static_cast<Real>(y)) *
                                   static_cast<Real>(inv_batch));
  }
  const double loss = total * inv_batch;
  if (!std::isfinite(loss)) throw Error(ErrorCode::kDiverged, "diverged");
  return loss;
}

template <typename Real>
Model<Real>::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const auto emb_q = config_.emb_quant();
  const auto mlp_q = config_.mlp_quant();
  const auto act_q = config_.act_quant();
  tables_.reserve(config_.num_tables);
  for (std::size_t rows : config_.table_rows) {
    tables_.emplace_back(rows, config_.embed_dim, emb_q);
  }
  for (std::size_t i = 0; i + 1 < config_.bottom_arch.size(); ++i) {
    bottom_.emplace_back(config_.bottom_arch[i], config_.bottom_arch[i + 1],
                         /*relu=*/true, mlp_q, act_q);
  }
  std::size_t in = config_.top_input();
  for (std::size_t i = 0; i < config_.top_arch.size(); ++i) {
    const bool last = i + 1 == config_.top_arch.size();
    top_.emplace_back(in, config_.top_arch[i], /*relu=*/!last, mlp_q,
                      last ? std::nullopt : act_q);
    in = config_.top_arch[i];
  }
}

template <typename Real>
void Model<Real>::init(uint64_t seed) {
  Rng rng(seed);
  for (auto& t : tables_) t.init_uniform(rng);
  for (auto& l : bottom_) l.init_normal(rng);
  for (auto& l : top_) l.init_normal(rng);
}

template <typename Real>
DenseLayer<Real>& Model<Real>::layer(std::size_t i) {
  return i < bottom_.size() ? bottom_[i] : top_.at(i - bottom_.size());
}

template <typename Real>
const DenseLayer<Real>& Model<Real>::layer(std::size_t i) const {
  return i < bottom_.size() ? bottom_[i] : top_.at(i - bottom_.size());
}

template <typename Real>
std::span<Real> Model<Real>::dense_tensor(std::size_t k) {
  auto& l = layer(k / 2);
  return k % 2 == 0 ? l.mutable_weight() : l.mutable_bias();
}

template <typename Real>
std::span<const Real> Model<Real>::dense_tensor(std::size_t k) const {
  const auto& l = layer(k / 2);
  return k % 2 == 0 ? l.weight() : l.bias();
}

template <typename Real>
std::span<Real> Model<Real>::grad_tensor(Gradients<Real>& grads, std::size_t k) {
  const std::size_t li = k / 2;
  auto& g = li < grads.bottom.size() ? grads.bottom[li]
                                     : grads.top.at(li - grads.bottom.size());
  return k % 2 == 0 ? std::span<Real>(g.weight) : std::span<Real>(g.bias);
}

template <typename Real>
std::span<const Real> Model<Real>::grad_tensor(const Gradients<Real>& grads,
                                               std::size_t k) {
  const std::size_t li = k / 2;
  const auto& g = li < grads.bottom.size()
                      ? grads.bottom[li]
                      : grads.top.at(li - grads.bottom.size());
  return k % 2 == 0 ? std::span<const Real>(g.weight)
                    : std::span<const Real>(g.bias);
}

template <typename Real>
void Model<Real>::set_quantization_enabled(bool enabled) {
  quant_enabled_ = enabled;
  for (auto& t : tables_) t.set_quantization_enabled(enabled);
  for (auto& l : bottom_) l.set_quantization_enabled(enabled);
  for (auto& l : top_) l.set_quantization_enabled(enabled);
}

template <typename Real>
int Model<Real>::update_scales(int64_t iter) {
  int updated = 0;
  for (auto& t : tables_) updated += t.maybe_update_scale(iter) ? 1 : 0;
  for (auto& l : bottom_) updated += l.maybe_update_scales(iter) ? 1 : 0;
  for (auto& l : top_) updated += l.maybe_update_scales(iter) ? 1 : 0;
  return updated;
}

template <typename Real>
std::span<const Real> Model<Real>::forward(const Batch& batch, int64_t iter,
                                           ForwardCache<Real>& cache) {
  update_scales(iter);
  run_forward(batch, cache);
  return cache.logits;
}

template <typename Real>
std::vector<Real> Model<Real>::predict(const Batch& batch) const {
  ForwardCache<Real> cache;
  run_forward(batch, cache);
  return cache.logits;
}

template <typename Real>
void Model<Real>::run_forward(const Batch& batch,
                              ForwardCache<Real>& cache) const {
  batch.validate(config_.table_rows);
  if (batch.dense_dim != config_.dense_in) {
    throw Error(ErrorCode::kInvalidArgument, "batch dense width != dense_in");
  }
  const std::size_t B = batch.size();
  const std::size_t d = config_.embed_dim;
  cache.batch = B;

  std::vector<Real> x(batch.dense.begin(), batch.dense.end());
  cache.bottom.resize(bottom_.size());
  for (std::size_t i = 0; i < bottom_.size(); ++i) {
    bottom_[i].forward(x, B, cache.bottom[i]);
    x = cache.bottom[i].output;
  }
  const std::vector<Real>& z = cache.bottom.back().output;

  cache.pooled.resize(tables_.size());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    cache.pooled[t].resize(B * d);
    tables_[t].forward(batch.indices[t], batch.offsets[t], cache.pooled[t]);
  }

  const std::size_t width = config_.top_input();
  std::vector<Real> inter(B * width);
  std::vector<std::span<const Real>> embs(tables_.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < tables_.size(); ++t) {
      embs[t] = std::span<const Real>(cache.pooled[t]).subspan(b * d, d);
    }
    interaction_forward<Real>(std::span<const Real>(z).subspan(b * d, d), embs,
                              std::span<Real>(inter).subspan(b * width, width));
  }

  x = std::move(inter);
  cache.top.resize(top_.size());
  for (std::size_t i = 0; i < top_.size(); ++i) {
    top_[i].forward(x, B, cache.top[i]);
    x = cache.top[i].output;
  }
  cache.logits = std::move(x);
}

template <typename Real>
Gradients<Real> Model<Real>::loss_and_backward(
    const Batch& batch, const ForwardCache<Real>& cache) const {
  const std::size_t B = cache.batch;
  const std::size_t d = config_.embed_dim;
  if (B != batch.size() || cache.logits.size() != B) {
    throw Error(ErrorCode::kShapeMismatch, "forward cache does not match batch");
  }
  Gradients<Real> grads;
  std::vector<Real> dy(B);
  grads.loss = bce_loss<Real>(cache.logits, batch.labels, dy);

  grads.top.resize(top_.size());
  for (std::size_t i = top_.size(); i-- > 0;) {
    std::vector<Real> dx(B * top_[i].in());
    top_[i].backward(cache.top[i], dy, B, grads.top[i], dx);
    dy = std::move(dx);
  }
  // dy is now the gradient w.r.t. the interaction output.
  const std::size_t width = config_.top_input();
  const std::vector<Real>& z = cache.bottom.back().output;
  std::vector<Real> dz(B * d, Real{0});
  std::vector<std::vector<Real>> dpooled(tables_.size(),
                                         std::vector<Real>(B * d, Real{0}));
  std::vector<std::span<const Real>> embs(tables_.size());
  std::vector<std::span<Real>> dembs(tables_.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < tables_.size(); ++t) {
      embs[t] = std::span<const Real>(cache.pooled[t]).subspan(b * d, d);
      dembs[t] = std::span<Real>(dpooled[t]).subspan(b * d, d);
    }
    interaction_backward<Real>(std::span<const Real>(z).subspan(b * d, d), embs,
                               std::span<const Real>(dy).subspan(b * width, width),
                               std::span<Real>(dz).subspan(b * d, d), dembs);
  }

  // Sum pooling: every looked-up row receives its bag's pooled gradient.
  grads.tables.reserve(tables_.size());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& idx = batch.indices[t];
    const auto& off = batch.offsets[t];
    std::vector<Real> rows(idx.size() * d);
    for (std::size_t b = 0; b < B; ++b) {
      for (uint32_t k = off[b]; k < off[b + 1]; ++k) {
        std::copy_n(dpooled[t].begin() + static_cast<std::ptrdiff_t>(b * d), d,
                    rows.begin() + static_cast<std::ptrdiff_t>(k * d));
      }
    }
    grads.tables.push_back(
        coalesce_sparse<Real>(static_cast<uint32_t>(t), d, idx, rows));
  }

  grads.bottom.resize(bottom_.size());
  dy = std::move(dz);
  for (std::size_t i = bottom_.size(); i-- > 0;) {
    std::vector<Real> dx;
    if (i > 0) dx.resize(B * bottom_[i].in());
    bottom_[i].backward(cache.bottom[i], dy, B, grads.bottom[i], dx);
    dy = std::move(dx);
  }
  return grads;
}

template <typename Real>
void Model<Real>::apply_gradients(const Gradients<Real>& grads, Real lr) {
  for (std::size_t i = 0; i < bottom_.size(); ++i) bottom_[i].apply_sgd(grads.bottom[i], lr);
  for (std::size_t i = 0; i < top_.size(); ++i) top_[i].apply_sgd(grads.top[i], lr);
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    tables_[t].apply_sparse_sgd(grads.tables.at(t), lr);
  }
}

template <typename Real>
uint64_t Model<Real>::checksum() const {
  uint64_t h = kFnvOffset;
  for (const auto& t : tables_) {
    fnv_mix<Real>(h, t.weights());
    if (t.scale()) {
      const float s = t.scale()->value;
      fnv_mix<float>(h, std::span<const float>(&s, 1));
    }
  }
  for (std::size_t i = 0; i < num_layers(); ++i) {
    const auto& l = layer(i);
    fnv_mix<Real>(h, l.weight());
    fnv_mix<Real>(h, l.bias());
    fnv_mix<Scale>(h, l.scales());
  }
  return h;
}

template class Model<float>;
template class Model<double>;
template double bce_loss<float>(std::span<const float>, std::span<const float>,
                                std::span<float>);
template double bce_loss<double>(std::span<const double>, std::span<const float>,
                                 std::span<double>);
template float sigmoid<float>(float);
template double sigmoid<double>(double);

}  // namespace dqrm
