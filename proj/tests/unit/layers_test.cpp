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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dqrm/dense_layer.hpp"
#include "dqrm/embedding.hpp"
#include "dqrm/error.hpp"
#include "dqrm/interaction.hpp"
#include "dqrm/rng.hpp"
#include "dqrm/sparse_gradient.hpp"

namespace dqrm {
namespace {

TEST(Rng, MatchesStandardEngine) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Rng rng(5489u);
  uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ULL);
}

TEST(Rng, UniformIntInRangeAndCoversAll) {
  Rng rng(3);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const uint64_t x = rng.uniform_int(7);
    ASSERT_LT(x, 7u);
    ++seen[x];
  }
  for (int c : seen) EXPECT_GT(c, 800);
}

TEST(Rng, NormalMoments) {
  Rng rng(4);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Embedding, UnquantizedLookupSumsRows) {
  EmbeddingTable<float> t(4, 2, std::nullopt);
  auto w = t.mutable_weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(i);
  const std::vector<uint32_t> idx{1, 3, 0};
  const std::vector<uint32_t> off{0, 2, 2, 3};
  std::vector<float> out(6);
  t.forward(idx, off, out);
  EXPECT_EQ(out, (std::vector<float>{8, 10, 0, 0, 0, 1}));
}

TEST(Embedding, RejectsBadIndicesAndMissingScale) {
  EmbeddingTable<float> t(4, 2, QuantSpec{4, Granularity::kPerTable, 1});
  std::vector<float> out(2);
  EXPECT_THROW(t.forward(std::vector<uint32_t>{0}, std::vector<uint32_t>{0, 1}, out), Error);
  t.maybe_update_scale(0);
  try {
    t.forward(std::vector<uint32_t>{4}, std::vector<uint32_t>{0, 1}, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
}

TEST(Embedding, ScaleRefreshesOnlyOnPeriodBoundaries) {
  EmbeddingTable<float> t(10, 3, QuantSpec{4, Granularity::kPerTable, 5});
  Rng rng(1);
  t.init_uniform(rng);
  EXPECT_TRUE(t.maybe_update_scale(3));  // no scale yet
  EXPECT_EQ(t.scale_iter(), 3);
  for (int64_t it = 4; it < 20; ++it) {
    t.mutable_weights()[0] += 0.5f;
    EXPECT_EQ(t.maybe_update_scale(it), it % 5 == 0) << it;
  }
  EXPECT_EQ(t.scale_iter(), 15);
}

TEST(Embedding, DisablingDropsScale) {
  EmbeddingTable<float> t(3, 2, QuantSpec{4, Granularity::kPerTable, 100});
  Rng rng(1);
  t.init_uniform(rng);
  t.maybe_update_scale(0);
  t.set_quantization_enabled(false);
  EXPECT_FALSE(t.quantization_active());
  t.set_quantization_enabled(true);
  EXPECT_FALSE(t.scale().has_value());
  EXPECT_TRUE(t.maybe_update_scale(7));
}

TEST(Embedding, InitWithinBound) {
  EmbeddingTable<float> t(400, 4, std::nullopt);
  Rng rng(9);
  t.init_uniform(rng);
  for (float w : t.weights()) EXPECT_LE(std::fabs(w), 1.0f / 20.0f);
}

TEST(SparseGradient, CoalesceSumsDuplicatesInOrder) {
  const std::vector<uint32_t> idx{5, 2, 5, 2, 9};
  const std::vector<float> rows{1, 1, 2, 2, 10, 10, 20, 20, 3, 3};
  const auto g = coalesce_sparse<float>(0, 2, idx, rows);
  EXPECT_EQ(g.indices, (std::vector<uint32_t>{2, 5, 9}));
  EXPECT_EQ(g.values, (std::vector<float>{22, 22, 11, 11, 3, 3}));
  const auto dense = scatter_to_dense(g, 10);
  EXPECT_EQ(dense[4], 22.0f);
  EXPECT_EQ(dense[0], 0.0f);
  const auto back = sparse_from_dense<float>(0, 2, dense);
  EXPECT_EQ(back.indices, g.indices);
  EXPECT_EQ(back.values, g.values);
}

TEST(SparseGradient, ValidateCatchesUnsorted) {
  SparseGradient<float> g;
  g.dim = 1;
  g.indices = {3, 1};
  g.values = {1, 1};
  EXPECT_THROW(g.validate(), Error);
}

TEST(SparseGradient, SparseSgdMatchesDense) {
  EmbeddingTable<float> a(6, 2, std::nullopt), b(6, 2, std::nullopt);
  Rng r1(2), r2(2);
  a.init_uniform(r1);
  b.init_uniform(r2);
  const auto g = coalesce_sparse<float>(0, 2, std::vector<uint32_t>{4, 1}, std::vector<float>{1, 2, 3, 4});
  a.apply_sparse_sgd(g, 0.1f);
  b.apply_dense_sgd(scatter_to_dense(g, 6), 0.1f);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(a.weights()[i], b.weights()[i]);
}

TEST(DenseLayer, ForwardMatchesHandComputation) {
  DenseLayer<double> l(2, 2, true, std::nullopt);
  auto w = l.mutable_weight();
  w[0] = 1; w[1] = -1; w[2] = 0.5; w[3] = 2;
  l.mutable_bias()[0] = 0.25;
  l.mutable_bias()[1] = -10;
  LayerCache<double> c;
  l.forward(std::vector<double>{3, 1}, 1, c);
  EXPECT_DOUBLE_EQ(c.pre[0], 2.25);
  EXPECT_DOUBLE_EQ(c.pre[1], -6.5);
  EXPECT_DOUBLE_EQ(c.output[0], 2.25);
  EXPECT_DOUBLE_EQ(c.output[1], 0.0);
}

TEST(DenseLayer, ChannelAndMatrixScales) {
  DenseLayer<float> ch(3, 2, false, QuantSpec{4, Granularity::kPerChannel, 1});
  DenseLayer<float> mx(3, 2, false, QuantSpec{4, Granularity::kPerTensor, 1});
  const std::vector<float> w{1, 2, -3.5f, 0.7f, 0, 0};
  std::copy(w.begin(), w.end(), ch.mutable_weight().begin());
  std::copy(w.begin(), w.end(), mx.mutable_weight().begin());
  ch.maybe_update_scales(0);
  mx.maybe_update_scales(0);
  ASSERT_EQ(ch.scales().size(), 2u);
  ASSERT_EQ(mx.scales().size(), 1u);
  EXPECT_FLOAT_EQ(ch.scales()[0].value, 0.5f);
  EXPECT_FLOAT_EQ(ch.scales()[1].value, 0.1f);
  EXPECT_FLOAT_EQ(mx.scales()[0].value, 0.5f);
  std::vector<float> ew(6);
  ch.effective_weight(ew);
  EXPECT_FLOAT_EQ(ew[3], 0.7f);  // exact on its own channel grid
  mx.effective_weight(ew);
  EXPECT_FLOAT_EQ(ew[3], 0.5f);  // 0.7 / 0.5 rounds to 1
}

TEST(DenseLayer, BackwardMatchesFiniteDifferences) {
  DenseLayer<double> l(3, 2, true, std::nullopt);
  Rng rng(5);
  l.init_normal(rng);
  const std::vector<double> x{0.3, -1.2, 0.8, 1.0, 0.1, -0.4};
  const std::vector<double> dy{0.7, -0.2, 0.1, 0.5};
  auto objective = [&] {
    LayerCache<double> c;
    l.forward(x, 2, c);
    double s = 0;
    for (std::size_t i = 0; i < dy.size(); ++i) s += dy[i] * c.output[i];
    return s;
  };
  LayerCache<double> c;
  l.forward(x, 2, c);
  LayerGrad<double> g;
  std::vector<double> dx(6);
  l.backward(c, dy, 2, g, dx);
  for (std::size_t i = 0; i < 6; ++i) {
    const double orig = l.weight()[i];
    l.mutable_weight()[i] = orig + 1e-6;
    const double p = objective();
    l.mutable_weight()[i] = orig - 1e-6;
    const double m = objective();
    l.mutable_weight()[i] = orig;
    EXPECT_NEAR(g.weight[i], (p - m) / 2e-6, 1e-7);
  }
}

TEST(Interaction, PairOrderAndValues) {
  const std::vector<double> z{1, 2};
  const std::vector<double> e0{3, 4}, e1{-1, 1};
  const std::vector<std::span<const double>> embs{e0, e1};
  std::vector<double> out(2 + interaction_pairs(3));
  interaction_forward<double>(z, embs, out);
  // z, then (e0,z), (e1,z), (e1,e0)
  EXPECT_EQ(out, (std::vector<double>{1, 2, 11, 1, 1}));
}

TEST(Interaction, BackwardIsAdjointOfForward) {
  Rng rng(8);
  const std::size_t d = 3, k = 4;
  std::vector<std::vector<double>> vecs(k, std::vector<double>(d));
  for (auto& v : vecs) for (auto& x : v) x = rng.normal();
  std::vector<std::span<const double>> embs(vecs.begin() + 1, vecs.end());
  std::vector<double> dout(d + interaction_pairs(k));
  for (auto& x : dout) x = rng.normal();
  std::vector<double> dz(d, 0.0);
  std::vector<std::vector<double>> de(k - 1, std::vector<double>(d, 0.0));
  std::vector<std::span<double>> dembs(de.begin(), de.end());
  interaction_backward<double>(vecs[0], embs, dout, dz, dembs);
  // Check dz[0] numerically.
  auto f = [&](double delta) {
    std::vector<double> z = vecs[0];
    z[0] += delta;
    std::vector<double> out(dout.size());
    interaction_forward<double>(z, embs, out);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * dout[i];
    return s;
  };
  EXPECT_NEAR(dz[0], (f(1e-6) - f(-1e-6)) / 2e-6, 1e-6);
}

}  // namespace
}  // namespace dqrm
