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

#include "dqrm/interaction.hpp"

#include <algorithm>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

template <typename Real>
std::span<const Real> vec_at(std::span<const Real> z,
                             std::span<const std::span<const Real>> embs,
                             std::size_t i) {
  return i == 0 ? z : embs[i - 1];
}

}  // namespace

template <typename Real>
void interaction_forward(std::span<const Real> z,
                         std::span<const std::span<const Real>> embs,
                         std::span<Real> out) {
  const std::size_t d = z.size();
  const std::size_t k = embs.size() + 1;
  if (out.size() != d + interaction_pairs(k)) {
    throw Error(ErrorCode::kShapeMismatch, "interaction output size mismatch");
  }
  for (const auto& e : embs) {
    if (e.size() != d) {
      throw Error(ErrorCode::kShapeMismatch,
                  "interaction: embedding dim != bottom output dim");
    }
  }
  std::copy(z.begin(), z.end(), out.begin());
  std::size_t pos = d;
  for (std::size_t i = 1; i < k; ++i) {
    const auto vi = vec_at(z, embs, i);
    for (std::size_t j = 0; j < i; ++j) {
      const auto vj = vec_at(z, embs, j);
      Real dot = 0;
      for (std::size_t t = 0; t < d; ++t) dot += vi[t] * vj[t];
      out[pos++] = dot;
    }
  }
}

template <typename Real>
void interaction_backward(std::span<const Real> z,
                          std::span<const std::span<const Real>> embs,
                          std::span<const Real> dout, std::span<Real> dz,
                          std::span<const std::span<Real>> dembs) {
  const std::size_t d = z.size();
  const std::size_t k = embs.size() + 1;
  if (dout.size() != d + interaction_pairs(k) || dz.size() != d ||
      dembs.size() != embs.size()) {
    throw Error(ErrorCode::kShapeMismatch, "interaction backward shape mismatch");
  }
  for (std::size_t t = 0; t < d; ++t) dz[t] += dout[t];
  auto grad_at = [&](std::size_t i) { return i == 0 ? dz : dembs[i - 1]; };
  std::size_t pos = d;
  for (std::size_t i = 1; i < k; ++i) {
    const auto vi = vec_at(z, embs, i);
    auto gi = grad_at(i);
    for (std::size_t j = 0; j < i; ++j) {
      const Real g = dout[pos++];
      if (g == Real{0}) continue;
      const auto vj = vec_at(z, embs, j);
      auto gj = grad_at(j);
      for (std::size_t t = 0; t < d; ++t) {
        gi[t] += g * vj[t];
        gj[t] += g * vi[t];
      }
    }
  }
}

template void interaction_forward<float>(std::span<const float>,
                                         std::span<const std::span<const float>>,
                                         std::span<float>);
template void interaction_forward<double>(
    std::span<const double>, std::span<const std::span<const double>>,
    std::span<double>);
template void interaction_backward<float>(
    std::span<const float>, std::span<const std::span<const float>>,
    std::span<const float>, std::span<float>,
    std::span<const std::span<float>>);
template void interaction_backward<double>(
    std::span<const double>, std::span<const std::span<const double>>,
    std::span<const double>, std::span<double>,
    std::span<const std::span<double>>);

}  // namespace dqrm
