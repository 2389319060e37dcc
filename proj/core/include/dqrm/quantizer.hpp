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

// Symmetric uniform quantization primitives.
//
// Codes live in the restricted range [-qmax, +qmax] with qmax = 2^(b-1) - 1,
// so the zero-point is always 0 and the most negative two's-complement code
// is never produced. Rounding is half-away-from-zero, which keeps
// quantize(-v) == -quantize(v). The scale is a single positive float per
// quantized group (a whole table, one MLP output row, or a whole tensor)
// derived from the static min/max of the group.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dqrm {

enum class Granularity { kPerTable, kPerChannel, kPerTensor };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

bool is_supported_bits(int bits);

struct QuantSpec {
  int bits = 4;
  Granularity granularity = Granularity::kPerTable;
  int update_period = 1;

  // Throws Error(kInvalidArgument) unless bits is one of {2,4,8,16} and the
  // period is positive.
  void validate() const;
  int qmax() const { return (1 << (bits - 1)) - 1; }
};

// Real value represented by one quantization step. Always positive and
// finite; stored and serialized as a 32-bit float.
struct Scale {
  float value = 1.0f;

  friend bool operator==(const Scale&, const Scale&) = default;
};

template <typename Real>
Real max_abs(std::span<const Real> values);

// s = max|v| / qmax. An all-zero input yields 1 / qmax.
// Errors: "empty tensor" for no values, "non-finite weight" for NaN/Inf.
template <typename Real>
Scale compute_scale(std::span<const Real> values, const QuantSpec& spec);

template <typename Real>
inline int32_t quantize_value(Real v, Scale s, int qmax) {
  Real r = std::round(v / static_cast<Real>(s.value));
  const Real hi = static_cast<Real>(qmax);
  if (r > hi) r = hi;
  if (r < -hi) r = -hi;
  return static_cast<int32_t>(r);
}

template <typename Real>
inline Real dequantize_value(int32_t q, Scale s) {
  return static_cast<Real>(q) * static_cast<Real>(s.value);
}

template <typename Real>
inline Real fake_quantize_value(Real v, Scale s, int qmax) {
  return dequantize_value<Real>(quantize_value(v, s, qmax), s);
}

template <typename Real>
void quantize(std::span<const Real> values, Scale s, const QuantSpec& spec,
              std::span<int32_t> out);
template <typename Real>
std::vector<int32_t> quantize(std::span<const Real> values, Scale s,
                              const QuantSpec& spec);

template <typename Real>
std::vector<Real> dequantize(std::span<const int32_t> codes, Scale s);

template <typename Real>
void fake_quantize(std::span<const Real> values, Scale s, const QuantSpec& spec,
                   std::span<Real> out);
template <typename Real>
std::vector<Real> fake_quantize(std::span<const Real> values, Scale s,
                                const QuantSpec& spec);

// Straight-through estimator: the upstream gradient passes unchanged, also
// for values that fell outside the frozen clipping range.
template <typename Real>
std::vector<Real> ste_backward(std::span<const Real> upstream);

// One scale per row of a row-major (rows x cols) matrix.
template <typename Real>
std::vector<Scale> per_channel_scales(std::span<const Real> weights,
                                      std::size_t rows, std::size_t cols,
                                      const QuantSpec& spec);

// Two codes per byte: element 2i in the low nibble of byte i, element 2i+1 in
// the high nibble, each stored as q + 8. Odd counts leave the last high nibble
// as 0x0. Errors: "code out of range" for q outside [-7, 7].
std::vector<uint8_t> pack_int4(std::span<const int32_t> codes);
std::vector<int32_t> unpack_int4(std::span<const uint8_t> bytes,
                                 std::size_t count);

}  // namespace dqrm
