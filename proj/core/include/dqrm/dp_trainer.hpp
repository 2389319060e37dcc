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
#include <functional>
#include <span>
#include <vector>

#include "dqrm/allreduce.hpp"
#include "dqrm/batch.hpp"
#include "dqrm/comm_accounting.hpp"
#include "dqrm/error_feedback.hpp"
#include "dqrm/model.hpp"

namespace dqrm {

// What one node contributed for one tensor in one iteration. For sparse
// table messages the spans hold the compact row values.
struct ExchangeTrace {
  int64_t iter = 0;
  std::size_t node = 0;
  std::size_t tensor = 0;  // dense tensors first, then tables
  bool is_table = false;
  std::span<const float> raw;
  std::span<const float> corrected;
  std::span<const float> transmitted;
  std::span<const float> buffer;  // residual after the update; empty if none
  Scale scale;                    // unified; 1 when unquantized
  std::size_t clipped = 0;
};

using ExchangeObserver = std::function<void(const ExchangeTrace&)>;

struct DpStepResult {
  std::vector<double> node_loss;
  double loss = 0.0;  // mean over nodes
  CommRecord comm;    // summed over all nodes
  std::size_t clipped = 0;
};

// N in-process replicas stepping in lockstep. Each step splits the global
// batch by rank, exchanges gradients through serialized wire messages (scale
// unification, then quantized codes summed in a wide accumulator) and applies
// the same averaged update everywhere.
class DataParallelTrainer {
 public:
  DataParallelTrainer(const Model<float>& init, const DpConfig& dp);

  // Errors: kConfig if the batch does not split evenly over the nodes,
  // kReplicaDrift if replica checksums disagree after the update,
  // kDiverged on a non-finite loss.
  DpStepResult step(const Batch& global_batch, int64_t iter);

  std::size_t nodes() const { return replicas_.size(); }
  const DpConfig& dp_config() const { return dp_; }
  const Model<float>& replica(std::size_t n) const { return replicas_.at(n); }
  Model<float>& replica(std::size_t n) { return replicas_.at(n); }
  const ErrorBuffer& error_buffer(std::size_t n) const { return buffers_.at(n); }
  const std::vector<WireMessage>& last_messages() const { return messages_; }

  void set_quantization_enabled(bool enabled);
  void set_observer(ExchangeObserver observer) { observer_ = std::move(observer); }

 private:
  void exchange_dense(int64_t iter, std::size_t tensor, bool is_table,
                      const std::vector<std::span<const float>>& raw,
                      std::span<float> out, std::size_t* clipped);
  SparseGradient<float> exchange_sparse(int64_t iter, std::size_t table,
                                        const std::vector<const SparseGradient<float>*>& parts,
                                        std::size_t* clipped);
  std::span<float> residual(std::size_t node, std::size_t tensor, bool is_table);

  DpConfig dp_;
  std::vector<Model<float>> replicas_;
  std::vector<ErrorBuffer> buffers_;
  std::vector<WireMessage> messages_;
  ExchangeObserver observer_;
};

}  // namespace dqrm
