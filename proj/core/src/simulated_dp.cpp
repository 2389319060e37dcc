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

#include "dqrm/simulated_dp.hpp"

#include <algorithm>

#include "dqrm/error.hpp"

namespace dqrm {

SimulatedDpTrainer::SimulatedDpTrainer(Model<float>& model, const DpConfig& dp)
    : model_(model), dp_(dp) {
  dp_.validate();
  const EcMode mode = dp_.quantized() ? dp_.ec : EcMode::kNone;
  for (std::size_t n = 0; n < dp_.nodes; ++n) buffers_.emplace_back(model.config(), mode);
  clear_buffers();
}

void SimulatedDpTrainer::clear_buffers() {
  const auto& cfg = model_.config();
  const std::size_t k_dense = model_.num_dense_tensors();
  const std::size_t slots = k_dense + cfg.num_tables;
  group_scales_.assign(slots, std::nullopt);
  fsum_.assign(slots, {});
  isum_.assign(slots, {});
  for (std::size_t k = 0; k < k_dense; ++k) {
    const std::size_t len = model_.dense_tensor(k).size();
    if (dp_.quantized()) {
      isum_[k].assign(len, 0);
    } else {
      fsum_[k].assign(len, 0.0f);
    }
  }
  for (std::size_t t = 0; t < cfg.num_tables; ++t) {
    if (dp_.sparse_emb) continue;
    const std::size_t len = cfg.table_rows[t] * cfg.embed_dim;
    if (dp_.quantized()) {
      isum_[k_dense + t].assign(len, 0);
    } else {
      fsum_[k_dense + t].assign(len, 0.0f);
    }
  }
  fparts_.assign(cfg.num_tables, {});
  iparts_.assign(cfg.num_tables, {});
}

void SimulatedDpTrainer::accumulate_tensor(std::size_t tensor, bool is_table,
                                           std::span<const float> raw,
                                           std::span<float> residual, std::size_t slot,
                                           std::size_t* clipped, std::span<float> fsum,
                                           std::span<int64_t> isum) {
  const std::size_t id = is_table ? model_.num_dense_tensors() + tensor : tensor;
  const int64_t iter = updates_;
  if (!dp_.quantized()) {
    for (std::size_t i = 0; i < raw.size(); ++i) fsum[i] += raw[i];
    if (observer_) observer_({iter, slot, tensor, is_table, raw, raw, raw, {}, Scale{1.0f}, 0});
    return;
  }
  std::vector<float> corrected(raw.begin(), raw.end());
  if (!residual.empty()) ec_correct(raw, residual, corrected);
  if (!group_scales_[id]) group_scales_[id] = local_grad_scale(corrected, dp_.grad_bits);
  const Scale s = group_scales_[id].value_or(Scale{1.0f});
  std::vector<int32_t> codes(corrected.size());
  const std::size_t c = quantize_grad(corrected, s, dp_.grad_bits, codes);
  *clipped += c;
  const std::vector<float> transmitted = dequantize<float>(codes, s);
  if (!residual.empty()) ec_update(corrected, transmitted, residual);
  for (std::size_t i = 0; i < codes.size(); ++i) isum[i] += codes[i];
  if (observer_) {
    observer_({iter, slot, tensor, is_table, raw, corrected, transmitted, residual, s, c});
  }
}

void SimulatedDpTrainer::accumulate(const Gradients<float>& g, std::size_t slot,
                                    std::size_t* clipped) {
  const auto& cfg = model_.config();
  ErrorBuffer& buf = buffers_[slot];
  const std::size_t k_dense = model_.num_dense_tensors();
  for (std::size_t k = 0; k < k_dense; ++k) {
    accumulate_tensor(k, false, Model<float>::grad_tensor(g, k),
                      buf.covers_dense() ? buf.dense(k) : std::span<float>(), slot, clipped,
                      fsum_[k], isum_[k]);
  }
  for (std::size_t t = 0; t < cfg.num_tables; ++t) {
    const std::span<float> residual = buf.covers_tables() ? buf.table(t) : std::span<float>();
    if (!dp_.sparse_emb) {
      const std::vector<float> dense = scatter_to_dense(g.tables[t], cfg.table_rows[t]);
      accumulate_tensor(t, true, dense, residual, slot, clipped, fsum_[k_dense + t],
                        isum_[k_dense + t]);
      continue;
    }
    if (!dp_.quantized()) {
      fparts_[t].push_back(g.tables[t]);
      if (observer_) {
        observer_({updates_, slot, t, true, g.tables[t].values, g.tables[t].values,
                   g.tables[t].values, {}, Scale{1.0f}, 0});
      }
      continue;
    }
    SparseGradient<float> corrected = g.tables[t];
    if (!residual.empty()) ec_correct_rows(corrected, residual);
    auto& scale = group_scales_[k_dense + t];
    if (!scale) scale = local_grad_scale(corrected.values, dp_.grad_bits);
    const Scale s = scale.value_or(Scale{1.0f});
    std::vector<int32_t> codes(corrected.values.size());
    const std::size_t c = quantize_grad(corrected.values, s, dp_.grad_bits, codes);
    *clipped += c;
    const std::vector<float> transmitted = dequantize<float>(codes, s);
    if (!residual.empty()) ec_update_rows(corrected, transmitted, residual);
    SparseGradient<int64_t> part;
    part.table = static_cast<uint32_t>(t);
    part.dim = corrected.dim;
    part.indices = corrected.indices;
    part.values.assign(codes.begin(), codes.end());
    iparts_[t].push_back(std::move(part));
    if (observer_) {
      observer_({updates_, slot, t, true, g.tables[t].values, corrected.values, transmitted, {},
                 s, c});
    }
  }
}

SimStepResult SimulatedDpTrainer::step(const Batch& microbatch) {
  if (buffer_clean_) {
    clear_buffers();
    ++clears_;
    buffer_clean_ = false;
  }
  SimStepResult result;
  ForwardCache<float> cache;
  model_.forward(microbatch, updates_, cache);
  const Gradients<float> g = model_.loss_and_backward(microbatch, cache);
  result.loss = g.loss;
  accumulate(g, in_group_, &result.clipped);
  ++microbatch_;
  ++in_group_;
  if (in_group_ == dp_.nodes) {
    apply_update();
    buffer_clean_ = true;
    result.updated = true;
  }
  return result;
}

bool SimulatedDpTrainer::flush() {
  if (in_group_ == 0) return false;
  apply_update();
  buffer_clean_ = true;
  return true;
}

void SimulatedDpTrainer::apply_update() {
  const auto& cfg = model_.config();
  const std::size_t n = in_group_;
  const std::size_t k_dense = model_.num_dense_tensors();
  const float lr = static_cast<float>(cfg.lr);
  auto reduce = [&](std::size_t id, std::span<float> out) {
    if (dp_.quantized()) {
      dequant_average(isum_[id], group_scales_[id].value_or(Scale{1.0f}), n, out);
    } else {
      average(fsum_[id], n, out);
    }
  };

  Gradients<float> avg;
  for (const auto& l : model_.bottom()) {
    avg.bottom.push_back({std::vector<float>(l.weight().size()), std::vector<float>(l.out())});
  }
  for (const auto& l : model_.top()) {
    avg.top.push_back({std::vector<float>(l.weight().size()), std::vector<float>(l.out())});
  }
  for (std::size_t k = 0; k < k_dense; ++k) reduce(k, Model<float>::grad_tensor(avg, k));
  for (std::size_t i = 0; i < model_.bottom().size(); ++i) {
    model_.bottom()[i].apply_sgd(avg.bottom[i], lr);
  }
  for (std::size_t i = 0; i < model_.top().size(); ++i) model_.top()[i].apply_sgd(avg.top[i], lr);

  for (std::size_t t = 0; t < cfg.num_tables; ++t) {
    auto& table = model_.tables()[t];
    if (!dp_.sparse_emb) {
      std::vector<float> dense(cfg.table_rows[t] * cfg.embed_dim);
      reduce(k_dense + t, dense);
      table.apply_dense_sgd(dense, lr);
      continue;
    }
    SparseGradient<float> out;
    if (dp_.quantized()) {
      const SparseGradient<int64_t> sums = allreduce_union_sparse<int64_t>(iparts_[t]);
      out.table = sums.table;
      out.dim = sums.dim;
      out.indices = sums.indices;
      out.values.resize(sums.values.size());
      dequant_average(sums.values, group_scales_[k_dense + t].value_or(Scale{1.0f}), n,
                      out.values);
    } else {
      out = allreduce_union_sparse<float>(fparts_[t]);
      average(out.values, n, out.values);
    }
    if (out.dim == 0) out.dim = cfg.embed_dim;
    table.apply_sparse_sgd(out, lr);
  }
  ++updates_;
  in_group_ = 0;
}

}  // namespace dqrm
