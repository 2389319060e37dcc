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
#include <vector>

#include "dqrm/allreduce.hpp"
#include "dqrm/batch.hpp"
#include "dqrm/dp_trainer.hpp"
#include "dqrm/error_feedback.hpp"
#include "dqrm/model.hpp"

namespace dqrm {

struct SimStepResult {
  double loss = 0.0;
  bool updated = false;
  std::size_t clipped = 0;
};

// Data parallelism imitated on one replica. Each microbatch plays the part
// of one node: its gradient goes into a per-tensor buffer and the weights
// move once every `nodes` microbatches, by the buffer average. With gradient
// quantization the whole group uses the scale of its first microbatch, since
// there is no second collective to agree on one.
class SimulatedDpTrainer {
 public:
  SimulatedDpTrainer(Model<float>& model, const DpConfig& dp);

  // Forward/backward on one microbatch; applies the update when it closes a
  // group. Scale refreshes use the group index as the iteration.
  SimStepResult step(const Batch& microbatch);
  // Applies a trailing partial group, averaging over its actual size.
  bool flush();

  int64_t microbatches() const { return microbatch_; }
  int64_t updates() const { return updates_; }
  int64_t buffer_clears() const { return clears_; }
  bool pending() const { return in_group_ > 0; }
  const ErrorBuffer& error_buffer(std::size_t slot) const { return buffers_.at(slot); }

  void set_observer(ExchangeObserver observer) { observer_ = std::move(observer); }

 private:
  void clear_buffers();
  void accumulate(const Gradients<float>& g, std::size_t slot, std::size_t* clipped);
  void accumulate_tensor(std::size_t tensor, bool is_table, std::span<const float> raw,
                         std::span<float> residual, std::size_t slot,
                         std::size_t* clipped, std::span<float> fsum,
                         std::span<int64_t> isum);
  void apply_update();

  Model<float>& model_;
  DpConfig dp_;
  std::vector<ErrorBuffer> buffers_;  // one per node slot

  bool buffer_clean_ = false;
  int64_t microbatch_ = 0;
  int64_t updates_ = 0;
  int64_t clears_ = 0;
  std::size_t in_group_ = 0;

  std::vector<std::optional<Scale>> group_scales_;  // dense tensors, then tables
  std::vector<std::vector<float>> fsum_;
  std::vector<std::vector<int64_t>> isum_;
  std::vector<std::vector<SparseGradient<float>>> fparts_;
  std::vector<std::vector<SparseGradient<int64_t>>> iparts_;
  ExchangeObserver observer_;
};

}  // namespace dqrm
