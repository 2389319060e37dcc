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

#include "dqrm/quantizer.hpp"

#include <limits>
#include <string>

#include "dqrm/error.hpp"

namespace dqrm {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kPerTable: return "table";
    case Granularity::kPerChannel: return "channel";
    case Granularity::kPerTensor: return "matrix";
  }
  return "?";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "table") return Granularity::kPerTable;
  if (text == "channel") return Granularity::kPerChannel;
  if (text == "matrix" || text == "tensor") return Granularity::kPerTensor;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown granularity '" + std::string(text) + "'");
}

bool is_supported_bits(int bits) {
  return bits == 2 || bits == 4 || bits == 8 || bits == 16;
}

void QuantSpec::validate() const {
  if (!is_supported_bits(bits)) {
    throw Error(ErrorCode::kInvalidArgument,
                "unsupported bit-width " + std::to_string(bits));
  }
  if (update_period < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "update period must be >= 1, got " +
                    std::to_string(update_period));
  }
}

template <typename Real>
Real max_abs(std::span<const Real> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyTensor, "empty tensor");
  Real m = 0;
  bool finite = true;
  for (Real v : values) {
    const Real a = std::fabs(v);
    finite &= (a <= std::numeric_limits<Real>::max());
    m = a > m ? a : m;
  }
  if (!finite) throw Error(ErrorCode::kNonFinite, "non-finite weight");
  return m;
}

template <typename Real>
Scale compute_scale(std::span<const Real> values, const QuantSpec& spec) {
  const Real m = max_abs(values);
  const int qmax = spec.qmax();
  if (m == 0) return Scale{1.0f / static_cast<float>(qmax)};
  Scale s{static_cast<float>(m / static_cast<Real>(qmax))};
  // Subnormal-range maxima can underflow once narrowed to float.
  if (!(s.value > 0.0f)) s.value = std::numeric_limits<float>::min();
  return s;
}

template <typename Real>
void quantize(std::span<const Real> values, Scale s, const QuantSpec& spec,
              std::span<int32_t> out) {
  if (out.size() != values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "quantize: output size mismatch");
  }
  const int qmax = spec.qmax();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = quantize_value(values[i], s, qmax);
  }
}

template <typename Real>
std::vector<int32_t> quantize(std::span<const Real> values, Scale s,
                              const QuantSpec& spec) {
  std::vector<int32_t> out(values.size());
  quantize<Real>(values, s, spec, out);
  return out;
}

template <typename Real>
std::vector<Real> dequantize(std::span<const int32_t> codes, Scale s) {
  std::vector<Real> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out[i] = dequantize_value<Real>(codes[i], s);
  }
  return out;
}

template <typename Real>
void fake_quantize(std::span<const Real> values, Scale s, const QuantSpec& spec,
                   std::span<Real> out) {
  if (out.size() != values.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "fake_quantize: output size mismatch");
  }
  const int qmax = spec.qmax();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = fake_quantize_value(values[i], s, qmax);
  }
}

template <typename Real>
std::vector<Real> fake_quantize(std::span<const Real> values, Scale s,
                                const QuantSpec& spec) {
  std::vector<Real> out(values.size());
  fake_quantize<Real>(values, s, spec, out);
  return out;
}

template <typename Real>
std::vector<Real> ste_backward(std::span<const Real> upstream) {
  return {upstream.begin(), upstream.end()};
}

template <typename Real>
std::vector<Scale> per_channel_scales(std::span<const Real> weights,
                                      std::size_t rows, std::size_t cols,
                                      const QuantSpec& spec) {
  if (weights.size() != rows * cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "per_channel_scales: weight size != rows * cols");
  }
  std::vector<Scale> scales;
  scales.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    scales.push_back(compute_scale<Real>(weights.subspan(r * cols, cols), spec));
  }
  return scales;
}

std::vector<uint8_t> pack_int4(std::span<const int32_t> codes) {
  std::vector<uint8_t> out((codes.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const int32_t q = codes[i];
    if (q < -7 || q > 7) {
      throw Error(ErrorCode::kCodeOutOfRange,
                  "code out of range: " + std::to_string(q));
    }
    const auto nibble = static_cast<uint8_t>(q + 8);
    out[i / 2] |= (i % 2 == 0) ? nibble : static_cast<uint8_t>(nibble << 4);
  }
  return out;
}

std::vector<int32_t> unpack_int4(std::span<const uint8_t> bytes,
                                 std::size_t count) {
  if (bytes.size() < (count + 1) / 2) {
    throw Error(ErrorCode::kTruncated, "unpack_int4: not enough bytes");
  }
  std::vector<int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const uint8_t b = bytes[i / 2];
    const int nibble = (i % 2 == 0) ? (b & 0x0F) : (b >> 4);
    out[i] = nibble - 8;
  }
  return out;
}

#define DQRM_INSTANTIATE_QUANTIZER(Real)                                      \
  template Real max_abs<Real>(std::span<const Real>);                          \
  template Scale compute_scale<Real>(std::span<const Real>, const QuantSpec&); \
  template void quantize<Real>(std::span<const Real>, Scale, const QuantSpec&, \
                               std::span<int32_t>);                            \
  template std::vector<int32_t> quantize<Real>(std::span<const Real>, Scale,   \
                                               const QuantSpec&);              \
  template std::vector<Real> dequantize<Real>(std::span<const int32_t>,        \
                                              Scale);                          \
  template void fake_quantize<Real>(std::span<const Real>, Scale,              \
                                    const QuantSpec&, std::span<Real>);        \
  template std::vector<Real> fake_quantize<Real>(std::span<const Real>, Scale, \
                                                 const QuantSpec&);            \
  template std::vector<Real> ste_backward<Real>(std::span<const Real>);        \
  template std::vector<Scale> per_channel_scales<Real>(                        \
      std::span<const Real>, std::size_t, std::size_t, const QuantSpec&);

DQRM_INSTANTIATE_QUANTIZER(float)
DQRM_INSTANTIATE_QUANTIZER(double)

#undef DQRM_INSTANTIATE_QUANTIZER

}  // namespace dqrm
