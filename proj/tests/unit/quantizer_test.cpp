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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dqrm/error.hpp"

namespace dqrm {
namespace {

TEST(QuantSpec, QmaxPerWidth) {
  EXPECT_EQ((QuantSpec{2, Granularity::kPerTable, 1}.qmax()), 1);
  EXPECT_EQ((QuantSpec{4, Granularity::kPerTable, 1}.qmax()), 7);
  EXPECT_EQ((QuantSpec{8, Granularity::kPerTable, 1}.qmax()), 127);
  EXPECT_EQ((QuantSpec{16, Granularity::kPerTable, 1}.qmax()), 32767);
}

TEST(QuantSpec, RejectsUnsupportedWidthAndPeriod) {
  for (int bits : {0, 1, 3, 5, 32}) {
    QuantSpec s{bits, Granularity::kPerTable, 1};
    EXPECT_THROW(s.validate(), Error) << bits;
  }
  QuantSpec s{4, Granularity::kPerTable, 0};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Granularity, ParseRoundTrip) {
  for (Granularity g : {Granularity::kPerTable, Granularity::kPerChannel, Granularity::kPerTensor}) {
    EXPECT_EQ(parse_granularity(to_string(g)), g);
  }
  EXPECT_THROW(parse_granularity("rowwise"), Error);
}

TEST(ComputeScale, MaxAbsOverQmax) {
  const std::vector<float> v{0.5f, -1.75f, 1.0f};
  const Scale s = compute_scale<float>(v, QuantSpec{4, Granularity::kPerTable, 1});
  EXPECT_FLOAT_EQ(s.value, 1.75f / 7.0f);
}

TEST(ComputeScale, AllZeroGivesInverseQmax) {
  const std::vector<float> v(10, 0.0f);
  EXPECT_FLOAT_EQ(compute_scale<float>(v, QuantSpec{8, Granularity::kPerTable, 1}).value, 1.0f / 127.0f);
}

TEST(ComputeScale, RejectsEmptyAndNonFinite) {
  const QuantSpec spec{4, Granularity::kPerTable, 1};
  EXPECT_THROW(compute_scale<float>(std::vector<float>{}, spec), Error);
  const std::vector<float> nan{1.0f, std::numeric_limits<float>::quiet_NaN()};
  try {
    compute_scale<float>(nan, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Quantize, HalfwayRoundsAwayFromZero) {
  const Scale s{1.0f};
  EXPECT_EQ(quantize_value<float>(0.5f, s, 7), 1);
  EXPECT_EQ(quantize_value<float>(-0.5f, s, 7), -1);
  EXPECT_EQ(quantize_value<float>(2.5f, s, 7), 3);
  EXPECT_EQ(quantize_value<float>(-2.5f, s, 7), -3);
  EXPECT_EQ(quantize_value<float>(0.49f, s, 7), 0);
}

TEST(Quantize, ClampsToRestrictedRange) {
  const Scale s{0.1f};
  EXPECT_EQ(quantize_value<float>(100.0f, s, 7), 7);
  EXPECT_EQ(quantize_value<float>(-100.0f, s, 7), -7);
  EXPECT_EQ(quantize_value<float>(-100.0f, s, 1), -1);
}

TEST(Quantize, HandComputedInt4) {
  // s = 2/7; values map to round(v * 3.5).
  const std::vector<float> v{2.0f, -2.0f, 0.3f, -0.2f, 1.2f};
  const QuantSpec spec{4, Granularity::kPerTable, 1};
  const Scale s = compute_scale<float>(v, spec);
  EXPECT_EQ(quantize<float>(v, s, spec), (std::vector<int32_t>{7, -7, 1, -1, 4}));
  const auto back = dequantize<float>(std::vector<int32_t>{7, -7, 1}, s);
  EXPECT_FLOAT_EQ(back[0], 2.0f);
  EXPECT_FLOAT_EQ(back[1], -2.0f);
  EXPECT_FLOAT_EQ(back[2], 2.0f / 7.0f);
}

TEST(Quantize, SpanOverloadsAgreeWithScalar) {
  std::vector<double> v;
  for (int i = -50; i <= 50; ++i) v.push_back(0.037 * i);
  const QuantSpec spec{8, Granularity::kPerTable, 1};
  const Scale s = compute_scale<double>(v, spec);
  const auto q = quantize<double>(v, s, spec);
  const auto f = fake_quantize<double>(v, s, spec);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(q[i], quantize_value(v[i], s, 127));
    EXPECT_EQ(f[i], fake_quantize_value(v[i], s, 127));
  }
}

TEST(Ste, PassesGradientUnchanged) {
  const std::vector<float> g{1.5f, -2.0f, 0.0f, 1e30f};
  EXPECT_EQ(ste_backward<float>(g), g);
}

TEST(PerChannel, OneScalePerRow) {
  const std::vector<float> w{1, -2, 3, 0, 0, 0, -7, 7, 0.5f};
  const auto s = per_channel_scales<float>(w, 3, 3, QuantSpec{4, Granularity::kPerChannel, 1});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_FLOAT_EQ(s[0].value, 3.0f / 7.0f);
  EXPECT_FLOAT_EQ(s[1].value, 1.0f / 7.0f);
  EXPECT_FLOAT_EQ(s[2].value, 1.0f);
}

TEST(PackInt4, LowNibbleFirst) {
  const std::vector<int32_t> c{-7, 7, 0};
  const auto p = pack_int4(c);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 0xF1);
  EXPECT_EQ(p[1], 0x08);
  EXPECT_EQ(unpack_int4(p, 3), c);
}

TEST(PackInt4, RejectsOutOfRangeAndShortInput) {
  EXPECT_THROW(pack_int4(std::vector<int32_t>{8}), Error);
  EXPECT_THROW(pack_int4(std::vector<int32_t>{-8}), Error);
  EXPECT_THROW(unpack_int4(std::vector<uint8_t>{0x11}, 3), Error);
}

}  // namespace
}  // namespace dqrm
