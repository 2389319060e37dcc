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

#include "dqrm/dp_trainer.hpp"

#include <algorithm>

#include "dqrm/error.hpp"

namespace dqrm {

DataParallelTrainer::DataParallelTrainer(const Model<float>& init, const DpConfig& dp)
    : dp_(dp) {
  dp_.validate();
  replicas_.assign(dp_.nodes, init);
  const EcMode mode = dp_.quantized() ? dp_.ec : EcMode::kNone;
  for (std::size_t n = 0; n < dp_.nodes; ++n) buffers_.emplace_back(init.config(), mode);
}

void DataParallelTrainer::set_quantization_enabled(bool enabled) {
  for (auto& r : replicas_) r.set_quantization_enabled(enabled);
}

std::span<float> DataParallelTrainer::residual(std::size_t node, std::size_t tensor,
                                               bool is_table) {
  ErrorBuffer& b = buffers_[node];
  if (is_table) return b.covers_tables() ? b.table(tensor) : std::span<float>();
  return b.covers_dense() ? b.dense(tensor) : std::span<float>();
}

void DataParallelTrainer::exchange_dense(int64_t iter, std::size_t tensor, bool is_table,
                                         const std::vector<std::span<const float>>& raw,
                                         std::span<float> out, std::size_t* clipped) {
  const std::size_t n_nodes = raw.size();
  const std::size_t len = out.size();
  const uint32_t wire_id = static_cast<uint32_t>(
      is_table ? replicas_[0].num_dense_tensors() + tensor : tensor);

  if (!dp_.quantized()) {
    std::vector<std::vector<float>> recv(n_nodes);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      messages_.push_back({MessageKind::kDenseValues, static_cast<uint32_t>(n), wire_id,
                           encode_fp32(raw[n])});
      recv[n] = decode_fp32(messages_.back().bytes);
      if (observer_) {
        observer_({iter, n, tensor, is_table, raw[n], raw[n], recv[n], {}, Scale{1.0f}, 0});
      }
    }
    std::vector<float> sums(len);
    allreduce_sum_dense(recv, sums);
    average(sums, n_nodes, out);
    return;
  }

  // Phase one: every node publishes the scale of its corrected gradient.
  std::vector<std::vector<float>> corrected(n_nodes);
  std::vector<std::optional<Scale>> local(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    corrected[n].assign(raw[n].begin(), raw[n].end());
    const auto buf = residual(n, tensor, is_table);
    if (!buf.empty()) ec_correct(raw[n], buf, corrected[n]);
    const auto s = local_grad_scale(corrected[n], dp_.grad_bits);
    messages_.push_back({MessageKind::kScale, static_cast<uint32_t>(n), wire_id,
                         encode_scale(s.value_or(Scale{0.0f}))});
    const Scale got = decode_scale(messages_.back().bytes);
    if (got.value > 0.0f) local[n] = got;
  }
  const Scale s = unify_scales(local, dp_.grad_bits);

  // Phase two: integer codes, summed in int64.
  std::vector<std::vector<int32_t>> recv(n_nodes);
  std::vector<int32_t> codes(len);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    const std::size_t c = quantize_grad(corrected[n], s, dp_.grad_bits, codes);
    *clipped += c;
    messages_.push_back({MessageKind::kDenseValues, static_cast<uint32_t>(n), wire_id,
                         encode_codes(codes, dp_.grad_bits)});
    recv[n] = decode_codes(messages_.back().bytes, dp_.grad_bits);
    const std::vector<float> transmitted = dequantize<float>(recv[n], s);
    const auto buf = residual(n, tensor, is_table);
    if (!buf.empty()) ec_update(corrected[n], transmitted, buf);
    if (observer_) {
      observer_({iter, n, tensor, is_table, raw[n], corrected[n], transmitted, buf, s, c});
    }
  }
  std::vector<int64_t> sums(len);
  allreduce_sum_dense(recv, sums);
  dequant_average(sums, s, n_nodes, out);
}

SparseGradient<float> DataParallelTrainer::exchange_sparse(
    int64_t iter, std::size_t table, const std::vector<const SparseGradient<float>*>& parts,
    std::size_t* clipped) {
  const std::size_t n_nodes = parts.size();
  const std::size_t d = parts[0]->dim;
  const uint32_t wire_id = static_cast<uint32_t>(replicas_[0].num_dense_tensors() + table);
  auto send_indices = [&](std::size_t n, const std::vector<uint32_t>& idx) {
    messages_.push_back({MessageKind::kSparseIndices, static_cast<uint32_t>(n), wire_id,
                         encode_indices(idx, dp_.index_bytes)});
    return decode_indices(messages_.back().bytes, dp_.index_bytes);
  };

  SparseGradient<float> out;
  if (!dp_.quantized()) {
    std::vector<SparseGradient<float>> recv(n_nodes);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      recv[n].table = static_cast<uint32_t>(table);
      recv[n].dim = d;
      recv[n].indices = send_indices(n, parts[n]->indices);
      messages_.push_back({MessageKind::kSparseValues, static_cast<uint32_t>(n), wire_id,
                           encode_fp32(parts[n]->values)});
      recv[n].values = decode_fp32(messages_.back().bytes);
      if (observer_) {
        observer_({iter, n, table, true, parts[n]->values, parts[n]->values, recv[n].values,
                   {}, Scale{1.0f}, 0});
      }
    }
    out = allreduce_union_sparse<float>(recv);
    average(out.values, n_nodes, out.values);
    return out;
  }

  std::vector<SparseGradient<float>> corrected(n_nodes);
  std::vector<std::optional<Scale>> local(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    corrected[n] = *parts[n];
    const auto buf = residual(n, table, true);
    if (!buf.empty()) ec_correct_rows(corrected[n], buf);
    const auto s = local_grad_scale(corrected[n].values, dp_.grad_bits);
    messages_.push_back({MessageKind::kScale, static_cast<uint32_t>(n), wire_id,
                         encode_scale(s.value_or(Scale{0.0f}))});
    const Scale got = decode_scale(messages_.back().bytes);
    if (got.value > 0.0f) local[n] = got;
  }
  const Scale s = unify_scales(local, dp_.grad_bits);

  std::vector<SparseGradient<int64_t>> recv(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    std::vector<int32_t> codes(corrected[n].values.size());
    const std::size_t c = quantize_grad(corrected[n].values, s, dp_.grad_bits, codes);
    *clipped += c;
    recv[n].table = static_cast<uint32_t>(table);
    recv[n].dim = d;
    recv[n].indices = send_indices(n, corrected[n].indices);
    messages_.push_back({MessageKind::kSparseValues, static_cast<uint32_t>(n), wire_id,
                         encode_codes(codes, dp_.grad_bits)});
    const std::vector<int32_t> got = decode_codes(messages_.back().bytes, dp_.grad_bits);
    recv[n].values.assign(got.begin(), got.end());
    const std::vector<float> transmitted = dequantize<float>(got, s);
    const auto buf = residual(n, table, true);
    if (!buf.empty()) ec_update_rows(corrected[n], transmitted, buf);
    if (observer_) {
      observer_({iter, n, table, true, parts[n]->values, corrected[n].values, transmitted,
                 {}, s, c});
    }
  }
  const SparseGradient<int64_t> sums = allreduce_union_sparse<int64_t>(recv);
  out.table = static_cast<uint32_t>(table);
  out.dim = d;
  out.indices = sums.indices;
  out.values.resize(sums.values.size());
  dequant_average(sums.values, s, n_nodes, out.values);
  return out;
}

DpStepResult DataParallelTrainer::step(const Batch& global_batch, int64_t iter) {
  const std::size_t n_nodes = replicas_.size();
  const std::size_t total = global_batch.size();
  if (total == 0 || total % n_nodes != 0) {
    throw Error(ErrorCode::kConfig, "global batch of " + std::to_string(total) +
                                        " does not split over " + std::to_string(n_nodes) +
                                        " nodes");
  }
  const std::size_t local = total / n_nodes;

  DpStepResult result;
  std::vector<Gradients<float>> grads(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    const Batch shard = n_nodes == 1 ? global_batch : global_batch.slice(n * local, (n + 1) * local);
    ForwardCache<float> cache;
    replicas_[n].forward(shard, iter, cache);
    grads[n] = replicas_[n].loss_and_backward(shard, cache);
    result.node_loss.push_back(grads[n].loss);
    result.loss += grads[n].loss;
  }
  result.loss /= static_cast<double>(n_nodes);

  messages_.clear();
  Gradients<float> avg;
  avg.bottom = grads[0].bottom;
  avg.top = grads[0].top;
  Model<float>& ref = replicas_[0];
  for (std::size_t k = 0; k < ref.num_dense_tensors(); ++k) {
    std::vector<std::span<const float>> raw;
    for (auto& g : grads) raw.push_back(Model<float>::grad_tensor(std::as_const(g), k));
    exchange_dense(iter, k, false, raw, Model<float>::grad_tensor(avg, k), &result.clipped);
  }

  const auto& cfg = ref.config();
  std::vector<std::vector<float>> dense_tables;
  for (std::size_t t = 0; t < cfg.num_tables; ++t) {
    if (dp_.sparse_emb) {
      std::vector<const SparseGradient<float>*> parts;
      for (auto& g : grads) parts.push_back(&g.tables[t]);
      avg.tables.push_back(exchange_sparse(iter, t, parts, &result.clipped));
    } else {
      std::vector<std::vector<float>> local_dense;
      std::vector<std::span<const float>> raw;
      for (auto& g : grads) local_dense.push_back(scatter_to_dense(g.tables[t], cfg.table_rows[t]));
      for (auto& v : local_dense) raw.emplace_back(v);
      dense_tables.emplace_back(cfg.table_rows[t] * cfg.embed_dim);
      exchange_dense(iter, t, true, raw, dense_tables.back(), &result.clipped);
    }
  }

  const float lr = static_cast<float>(cfg.lr);
  for (auto& r : replicas_) {
    for (std::size_t i = 0; i < r.bottom().size(); ++i) r.bottom()[i].apply_sgd(avg.bottom[i], lr);
    for (std::size_t i = 0; i < r.top().size(); ++i) r.top()[i].apply_sgd(avg.top[i], lr);
    for (std::size_t t = 0; t < cfg.num_tables; ++t) {
      if (dp_.sparse_emb) {
        r.tables()[t].apply_sparse_sgd(avg.tables[t], lr);
      } else {
        r.tables()[t].apply_dense_sgd(dense_tables[t], lr);
      }
    }
  }

  const uint64_t sum0 = replicas_[0].checksum();
  for (std::size_t n = 1; n < n_nodes; ++n) {
    if (replicas_[n].checksum() != sum0) {
      throw Error(ErrorCode::kReplicaDrift,
                  "replica drift: node " + std::to_string(n) + " diverged at iteration " +
                      std::to_string(iter));
    }
  }
  result.comm = account_bytes(messages_);
  return result;
}

}  // namespace dqrm
