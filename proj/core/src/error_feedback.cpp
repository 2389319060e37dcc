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

#include "dqrm/error_feedback.hpp"

#include <algorithm>
#include <cmath>

#include "dqrm/error.hpp"

namespace dqrm {

std::string_view to_string(EcMode mode) {
  switch (mode) {
    case EcMode::kNone: return "none";
    case EcMode::kMlp: return "mlp";
    case EcMode::kAll: return "all";
  }
  return "none";
}

EcMode parse_ec_mode(std::string_view text) {
  if (text == "none") return EcMode::kNone;
  if (text == "mlp") return EcMode::kMlp;
  if (text == "all") return EcMode::kAll;
  throw Error(ErrorCode::kConfig, "unknown ec mode '" + std::string(text) + "'");
}

void ec_correct(std::span<const float> grad, std::span<const float> buffer,
                std::span<float> corrected) {
  if (grad.size() != buffer.size() || corrected.size() != grad.size()) {
    throw Error(ErrorCode::kShapeMismatch, "error buffer shape mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) corrected[i] = grad[i] + buffer[i];
}

void ec_update(std::span<const float> corrected,
               std::span<const float> transmitted, std::span<float> buffer) {
  if (corrected.size() != transmitted.size() || buffer.size() != corrected.size()) {
    throw Error(ErrorCode::kShapeMismatch, "error buffer shape mismatch");
  }
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    buffer[i] = corrected[i] - transmitted[i];
  }
}

void ec_correct_rows(SparseGradient<float>& grad, std::span<const float> table) {
  for (std::size_t i = 0; i < grad.indices.size(); ++i) {
    const std::size_t base = static_cast<std::size_t>(grad.indices[i]) * grad.dim;
    if (base + grad.dim > table.size()) {
      throw Error(ErrorCode::kShapeMismatch, "error buffer shape mismatch");
    }
    auto row = grad.row(i);
    for (std::size_t j = 0; j < grad.dim; ++j) row[j] += table[base + j];
  }
}

void ec_update_rows(const SparseGradient<float>& corrected,
                    std::span<const float> transmitted, std::span<float> table) {
  if (transmitted.size() != corrected.values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "error buffer shape mismatch");
  }
  const std::size_t d = corrected.dim;
  for (std::size_t i = 0; i < corrected.indices.size(); ++i) {
    const std::size_t base = static_cast<std::size_t>(corrected.indices[i]) * d;
    if (base + d > table.size()) {
      throw Error(ErrorCode::kShapeMismatch, "error buffer shape mismatch");
    }
    ec_update(corrected.row(i), transmitted.subspan(i * d, d), table.subspan(base, d));
  }
}

ErrorBuffer::ErrorBuffer(const ModelConfig& config, EcMode mode) : mode_(mode) {
  if (mode == EcMode::kNone) return;
  std::size_t in = config.bottom_arch.front();
  auto add_layer = [&](std::size_t out) {
    dense_.emplace_back(in * out, 0.0f);
    dense_.emplace_back(out, 0.0f);
    in = out;
  };
  for (std::size_t i = 1; i < config.bottom_arch.size(); ++i) add_layer(config.bottom_arch[i]);
  in = config.top_input();
  for (std::size_t w : config.top_arch) add_layer(w);
  if (mode == EcMode::kAll) {
    for (std::size_t r : config.table_rows) tables_.emplace_back(r * config.embed_dim, 0.0f);
  }
}

bool ErrorBuffer::all_finite() const {
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  return std::all_of(dense_.begin(), dense_.end(), finite) &&
         std::all_of(tables_.begin(), tables_.end(), finite);
}

}  // namespace dqrm
