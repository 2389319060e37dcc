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

#include <benchmark/benchmark.h>

#include <vector>

#include "dqrm/batch.hpp"
#include "dqrm/criteo.hpp"
#include "dqrm/model.hpp"
#include "dqrm/run_config.hpp"
#include "dqrm/synthetic.hpp"

namespace {

std::vector<dqrm::Batch> batches_for(const dqrm::ModelConfig& cfg, std::size_t batch) {
  dqrm::SynthSpec spec;
  spec.num_samples = batch * 32;
  spec.table_rows = cfg.table_rows;
  std::vector<dqrm::Example> ex;
  for (const auto& r : dqrm::generate_synthetic(spec)) ex.push_back(dqrm::to_example(r, cfg.table_rows));
  return dqrm::make_batches(ex, batch, true);
}

// One training step on a single 10^6-row table; the argument is the scale
// refresh period.
void BM_TrainStepPeriod(benchmark::State& state) {
  dqrm::ModelConfig cfg = dqrm::desk_model_config();
  cfg.table_rows = {1000000};
  cfg.num_tables = 1;
  cfg.period = static_cast<int>(state.range(0));
  dqrm::Model<float> model(cfg);
  model.init(1);
  const auto batches = batches_for(cfg, 128);
  dqrm::ForwardCache<float> cache;
  int64_t iter = 1;  // skip the initial refresh at iteration 0
  model.update_scales(0);
  for (auto _ : state) {
    const auto& b = batches[static_cast<std::size_t>(iter) % batches.size()];
    model.forward(b, iter, cache);
    model.apply_gradients(model.loss_and_backward(b, cache), 0.1f);
    ++iter;
  }
}
BENCHMARK(BM_TrainStepPeriod)->Arg(1)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainStepDesk(benchmark::State& state) {
  dqrm::ModelConfig cfg = dqrm::desk_model_config();
  cfg.emb_bits = static_cast<int>(state.range(0));
  cfg.mlp_bits = static_cast<int>(state.range(0));
  dqrm::Model<float> model(cfg);
  model.init(1);
  const auto batches = batches_for(cfg, 128);
  dqrm::ForwardCache<float> cache;
  int64_t iter = 0;
  for (auto _ : state) {
    const auto& b = batches[static_cast<std::size_t>(iter) % batches.size()];
    model.forward(b, iter, cache);
    model.apply_gradients(model.loss_and_backward(b, cache), 0.1f);
    ++iter;
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TrainStepDesk)->Arg(4)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

}  // namespace
