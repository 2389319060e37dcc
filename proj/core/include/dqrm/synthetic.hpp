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
#include <vector>

#include "dqrm/criteo.hpp"

namespace dqrm {

// Desk-scale stand-in for Criteo traffic.
//
// Categorical ids per table are Zipf(skew) over [0, rows) and written as
// 8-digit lowercase hex, so the records go through the same hashing path as
// real data. Labels come from a hidden logistic model: a few dense
// coefficients, one pseudo-random effect per (table, id), and planted
// pairwise interactions between tables (0,1) and (2,3). Each label is then
// flipped with probability label_noise.
struct SynthSpec {
  std::size_t num_samples = 10000;
  std::vector<std::size_t> table_rows;  // at most 26 tables
  double skew = 1.1;
  double label_noise = 0.0;
  uint64_t seed = 1;

  void validate() const;
};

std::vector<RawRecord> generate_synthetic(const SynthSpec& spec);

// Generator id recovered from a synthetic categorical field.
uint32_t synthetic_id(const std::string& field);

}  // namespace dqrm
