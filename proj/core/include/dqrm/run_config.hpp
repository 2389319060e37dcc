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
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dqrm/allreduce.hpp"
#include "dqrm/model.hpp"
#include "dqrm/synthetic.hpp"

namespace dqrm {

enum class DpMode { kReal, kSimulated };

// Everything a run depends on. Text form is one `key = value` per line; '#'
// starts a comment. Lists are comma separated.
struct RunConfig {
  ModelConfig model;
  DpConfig dp;
  DpMode dp_mode = DpMode::kReal;
  SynthSpec synth;  // table_rows mirror model.table_rows

  std::string train_data;  // empty: synthetic
  std::string test_data;   // empty: hold out test_fraction of the training stream
  std::size_t max_records = 0;
  double test_fraction = 0.2;

  std::size_t batch_size = 128;  // global batch
  int epochs = 1;                // epochs with quantization on (after pretraining)
  int64_t eval_every = 0;        // iterations; 0 evaluates at epoch ends only
  bool eval_train = true;
  bool shuffle = true;
  uint64_t seed = 1;
  std::string out_dir = ".";

  RunConfig();

  // Errors: Error(kConfig).
  void set(std::string_view key, std::string_view value);
  void validate() const;

  // Every key with its resolved value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
};

// A small CTR model over eight tables, sized for desk runs.
ModelConfig desk_model_config();

// Errors: Error(kConfig) naming the line for syntax errors or unknown keys.
void apply_config_text(RunConfig& config, std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
// "key=value" strings, applied after the file.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

std::string format_run_config(const RunConfig& config);

}  // namespace dqrm
