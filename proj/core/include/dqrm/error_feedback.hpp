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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqrm/model.hpp"
#include "dqrm/sparse_gradient.hpp"

namespace dqrm {

// Which gradient tensors carry a quantization residual between iterations.
enum class EcMode { kNone, kMlp, kAll };

std::string_view to_string(EcMode mode);
EcMode parse_ec_mode(std::string_view text);  // "none" | "mlp" | "all"

// corrected = grad + buffer. Errors: kShapeMismatch.
void ec_correct(std::span<const float> grad, std::span<const float> buffer,
                std::span<float> corrected);
// buffer = corrected - transmitted, where transmitted is the dequantized
// message actually sent. Errors: kShapeMismatch.
void ec_update(std::span<const float> corrected,
               std::span<const float> transmitted, std::span<float> buffer);

// Row-wise forms for sparse table messages: `table` is the full R x d
// residual, only the rows named by the gradient are read or written.
void ec_correct_rows(SparseGradient<float>& grad, std::span<const float> table);
void ec_update_rows(const SparseGradient<float>& corrected,
                    std::span<const float> transmitted, std::span<float> table);

// Per-node residual storage. MLP tensors follow Model::dense_tensor order;
// table residuals (EcMode::kAll only) are full R x d matrices.
class ErrorBuffer {
 public:
  ErrorBuffer() = default;
  ErrorBuffer(const ModelConfig& config, EcMode mode);

  EcMode mode() const { return mode_; }
  bool covers_dense() const { return mode_ != EcMode::kNone; }
  bool covers_tables() const { return mode_ == EcMode::kAll; }

  std::span<float> dense(std::size_t k) { return dense_.at(k); }
  std::span<const float> dense(std::size_t k) const { return dense_.at(k); }
  std::span<float> table(std::size_t t) { return tables_.at(t); }
  std::span<const float> table(std::size_t t) const { return tables_.at(t); }

  bool all_finite() const;

 private:
  EcMode mode_ = EcMode::kNone;
  std::vector<std::vector<float>> dense_;
  std::vector<std::vector<float>> tables_;
};

}  // namespace dqrm
