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

namespace dqrm {

// Number of strictly-lower-triangle pairs among k vectors.
constexpr std::size_t interaction_pairs(std::size_t k) {
  return k * (k - 1) / 2;
}

// Dot-product feature interaction for one sample.
//
// The k = 1 + embs.size() vectors are stacked as [z, e_0, e_1, ...]. The
// output is z followed by dot(v_i, v_j) for every i > j, enumerated row-major
// (i = 1..k-1, j = 0..i-1). out.size() must be d + k(k-1)/2.
template <typename Real>
void interaction_forward(std::span<const Real> z,
                         std::span<const std::span<const Real>> embs,
                         std::span<Real> out);

// Accumulates (+=) into dz and each dembs[t]; callers zero them first.
template <typename Real>
void interaction_backward(std::span<const Real> z,
                          std::span<const std::span<const Real>> embs,
                          std::span<const Real> dout, std::span<Real> dz,
                          std::span<const std::span<Real>> dembs);

}  // namespace dqrm
