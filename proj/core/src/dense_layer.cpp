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

#include "dqrm/dense_layer.hpp"

#include <algorithm>
#include <cmath>

#include "dqrm/error.hpp"

namespace dqrm {

template <typename Real>
DenseLayer<Real>::DenseLayer(std::size_t in, std::size_t out, bool relu,
                             std::optional<QuantSpec> weight_quant,
                             std::optional<QuantSpec> act_quant)
    : in_(in),
      out_(out),
      relu_(relu),
      weight_(in * out, Real{0}),
      bias_(out, Real{0}),
      weight_quant_(weight_quant),
      act_quant_(act_quant) {
  if (in == 0 || out == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dense layer needs in, out > 0");
  }
  if (weight_quant_) {
    weight_quant_->validate();
    if (weight_quant_->granularity == Granularity::kPerTable) {
      weight_quant_->granularity = Granularity::kPerChannel;
    }
  }
  if (act_quant_) act_quant_->validate();
}

template <typename Real>
void DenseLayer<Real>::init_normal(Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_ + out_));
  for (auto& w : weight_) w = static_cast<Real>(rng.normal() * stddev);
  std::fill(bias_.begin(), bias_.end(), Real{0});
  scales_.clear();
  scale_iter_ = -1;
}

template <typename Real>
void DenseLayer<Real>::set_quantization_enabled(bool enabled) {
  if (enabled && !enabled_) {
    scales_.clear();
    scale_iter_ = -1;
  }
  enabled_ = enabled;
}

template <typename Real>
std::size_t DenseLayer<Real>::num_scales() const {
  if (!weight_quant_) return 0;
  return weight_quant_->granularity == Granularity::kPerChannel ? out_ : 1;
}

template <typename Real>
void DenseLayer<Real>::set_scales(std::vector<Scale> scales, int64_t iter) {
  if (scales.size() != num_scales()) {
    throw Error(ErrorCode::kShapeMismatch, "dense layer scale count mismatch");
  }
  for (const Scale& s : scales) {
    if (!(s.value > 0.0f) || !std::isfinite(s.value)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scale must be positive and finite");
    }
  }
  scales_ = std::move(scales);
  scale_iter_ = iter;
}

template <typename Real>
bool DenseLayer<Real>::maybe_update_scales(int64_t iter) {
  if (!quantization_active()) return false;
  if (!scales_.empty() && iter % weight_quant_->update_period != 0) return false;
  if (weight_quant_->granularity == Granularity::kPerChannel) {
    scales_ = per_channel_scales<Real>(weight_, out_, in_, *weight_quant_);
  } else {
    scales_ = {compute_scale<Real>(weight_, *weight_quant_)};
  }
  scale_iter_ = iter;
  return true;
}

template <typename Real>
void DenseLayer<Real>::effective_weight(std::span<Real> out) const {
  if (out.size() != weight_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "effective weight size mismatch");
  }
  if (!quantization_active()) {
    std::copy(weight_.begin(), weight_.end(), out.begin());
    return;
  }
  if (scales_.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "quantization scales not initialized; call maybe_update_scales");
  }
  const int qmax = weight_quant_->qmax();
  const bool per_channel = scales_.size() == out_;
  for (std::size_t o = 0; o < out_; ++o) {
    const Scale s = per_channel ? scales_[o] : scales_[0];
    for (std::size_t i = 0; i < in_; ++i) {
      out[o * in_ + i] = fake_quantize_value(weight_[o * in_ + i], s, qmax);
    }
  }
}

template <typename Real>
void DenseLayer<Real>::forward(std::span<const Real> x, std::size_t batch,
                               LayerCache<Real>& cache) const {
  if (x.size() != batch * in_) {
    throw Error(ErrorCode::kShapeMismatch, "dense layer input size mismatch");
  }
  cache.input.assign(x.begin(), x.end());
  cache.w_eff.resize(weight_.size());
  effective_weight(cache.w_eff);

  // Transposed copy so the inner loop is a contiguous axpy over outputs.
  std::vector<Real> w_t(in_ * out_);
  for (std::size_t o = 0; o < out_; ++o) {
    for (std::size_t i = 0; i < in_; ++i) w_t[i * out_ + o] = cache.w_eff[o * in_ + i];
  }

  cache.pre.resize(batch * out_);
  for (std::size_t b = 0; b < batch; ++b) {
    Real* y = cache.pre.data() + b * out_;
    std::copy(bias_.begin(), bias_.end(), y);
    const Real* xb = x.data() + b * in_;
    for (std::size_t i = 0; i < in_; ++i) {
      const Real xi = xb[i];
      if (xi == Real{0}) continue;
      const Real* wrow = w_t.data() + i * out_;
      for (std::size_t o = 0; o < out_; ++o) y[o] += xi * wrow[o];
    }
  }

  cache.output = cache.pre;
  if (relu_) {
    for (auto& v : cache.output) v = v > Real{0} ? v : Real{0};
  }
  if (act_quant_ && enabled_) {
    // Dynamic per-batch scale; the backward pass treats this as identity.
    const Scale s = compute_scale<Real>(cache.output, *act_quant_);
    fake_quantize<Real>(cache.output, s, *act_quant_, cache.output);
  }
}

template <typename Real>
void DenseLayer<Real>::backward(const LayerCache<Real>& cache,
                                std::span<const Real> dy, std::size_t batch,
                                LayerGrad<Real>& grad,
                                std::span<Real> dx) const {
  if (dy.size() != batch * out_) {
    throw Error(ErrorCode::kShapeMismatch, "dense layer dy size mismatch");
  }
  std::vector<Real> dpre(dy.begin(), dy.end());
  if (relu_) {
    for (std::size_t k = 0; k < dpre.size(); ++k) {
      if (!(cache.pre[k] > Real{0})) dpre[k] = Real{0};
    }
  }

  grad.weight.assign(out_ * in_, Real{0});
  grad.bias.assign(out_, Real{0});
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* g = dpre.data() + b * out_;
    const Real* xb = cache.input.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const Real go = g[o];
      grad.bias[o] += go;
      if (go == Real{0}) continue;
      Real* gw = grad.weight.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) gw[i] += go * xb[i];
    }
  }

  if (dx.empty()) return;
  if (dx.size() != batch * in_) {
    throw Error(ErrorCode::kShapeMismatch, "dense layer dx size mismatch");
  }
  std::fill(dx.begin(), dx.end(), Real{0});
  for (std::size_t b = 0; b < batch; ++b) {
    const Real* g = dpre.data() + b * out_;
    Real* dxb = dx.data() + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const Real go = g[o];
      if (go == Real{0}) continue;
      const Real* w = cache.w_eff.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) dxb[i] += go * w[i];
    }
  }
}

template <typename Real>
void DenseLayer<Real>::apply_sgd(const LayerGrad<Real>& grad, Real lr) {
  if (grad.weight.size() != weight_.size() || grad.bias.size() != bias_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dense gradient shape mismatch");
  }
  for (std::size_t k = 0; k < weight_.size(); ++k) weight_[k] -= lr * grad.weight[k];
  for (std::size_t k = 0; k < bias_.size(); ++k) bias_[k] -= lr * grad.bias[k];
}

template class DenseLayer<float>;
template class DenseLayer<double>;

}  // namespace dqrm
