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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "dqrm/batch.hpp"
#include "dqrm/metrics.hpp"
#include "dqrm/model.hpp"
#include "dqrm/run_config.hpp"

namespace dqrm {

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> test;
};

// Criteo files when configured, otherwise the synthetic generator; the test
// split is the tail of the stream. Errors: kIo, kMalformedRecord, kConfig.
Dataset load_dataset(const RunConfig& config);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // nullopt when one class only
  std::size_t examples = 0;
};

EvalResult evaluate(const Model<float>& model, std::span<const Example> examples,
                    std::size_t batch_size = 1024);

struct TrainSummary {
  int64_t iterations = 0;
  double final_train_loss = 0.0;
  EvalResult train;  // valid when eval_train is on
  EvalResult test;
  uint64_t checksum = 0;
  std::filesystem::path model_path;
  std::filesystem::path log_path;
};

// Trains per `config` and writes <out_dir>/metrics.jsonl and
// <out_dir>/model.dqrm. Single node, lockstep data parallel or the
// single-replica simulation, chosen by nodes and dp_mode.
// Errors: any library Error; kDiverged on a non-finite loss.
TrainSummary run_training(const RunConfig& config);
TrainSummary run_training(const RunConfig& config, const Dataset& data);

}  // namespace dqrm
