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
#include <span>
#include <vector>

#include "dqrm/quantizer.hpp"
#include "dqrm/rng.hpp"

namespace dqrm {

// Activations kept from the forward pass for backprop.
template <typename Real>
struct LayerCache {
  std::vector<Real> input;   // batch x in
  std::vector<Real> pre;     // batch x out, before ReLU
  std::vector<Real> output;  // batch x out
  std::vector<Real> w_eff;   // out x in, the weight the forward pass used
};

template <typename Real>
struct LayerGrad {
  std::vector<Real> weight;  // out x in
  std::vector<Real> bias;    // out
};

// Fully connected layer y = act(W_hat x + b). W_hat is the fake-quantized
// weight, one scale per output row (channel-wise) or one for the whole matrix;
// biases are never quantized.
template <typename Real>
class DenseLayer {
 public:
  DenseLayer(std::size_t in, std::size_t out, bool relu,
             std::optional<QuantSpec> weight_quant,
             std::optional<QuantSpec> act_quant = std::nullopt);

  // Zero-mean normal with std sqrt(2 / (fan_in + fan_out)); zero bias.
  void init_normal(Rng& rng);

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  bool relu() const { return relu_; }

  std::span<const Real> weight() const { return weight_; }
  std::span<Real> mutable_weight() { return weight_; }
  std::span<const Real> bias() const { return bias_; }
  std::span<Real> mutable_bias() { return bias_; }

  const std::optional<QuantSpec>& weight_quant() const { return weight_quant_; }
  const std::optional<QuantSpec>& act_quant() const { return act_quant_; }
  bool quantization_active() const {
    return weight_quant_.has_value() && enabled_;
  }
  void set_quantization_enabled(bool enabled);

  // out entries for channel-wise, 1 for matrix-wise, empty when unquantized.
  const std::vector<Scale>& scales() const { return scales_; }
  int64_t scale_iter() const { return scale_iter_; }
  void set_scales(std::vector<Scale> scales, int64_t iter);
  bool maybe_update_scales(int64_t iter);
  std::size_t num_scales() const;

  void effective_weight(std::span<Real> out) const;

  void forward(std::span<const Real> x, std::size_t batch,
               LayerCache<Real>& cache) const;
  // dy is the gradient w.r.t. cache.output. dx may be empty to skip it.
  void backward(const LayerCache<Real>& cache, std::span<const Real> dy,
                std::size_t batch, LayerGrad<Real>& grad,
                std::span<Real> dx) const;

  void apply_sgd(const LayerGrad<Real>& grad, Real lr);

 private:
  std::size_t in_;
  std::size_t out_;
  bool relu_;
  std::vector<Real> weight_;
  std::vector<Real> bias_;
  std::optional<QuantSpec> weight_quant_;
  std::optional<QuantSpec> act_quant_;
  bool enabled_ = true;
  std::vector<Scale> scales_;
  int64_t scale_iter_ = -1;
};

}  // namespace dqrm
