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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dqrm/allreduce.hpp"
#include "dqrm/comm_accounting.hpp"
#include "dqrm/criteo.hpp"
#include "dqrm/dp_trainer.hpp"
#include "dqrm/error.hpp"
#include "dqrm/error_feedback.hpp"
#include "dqrm/model.hpp"
#include "dqrm/rng.hpp"
#include "dqrm/simulated_dp.hpp"
#include "dqrm/synthetic.hpp"

namespace dqrm {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.table_rows = {30, 12, 50, 5};
  c.num_tables = 4;
  c.embed_dim = 4;
  c.bottom_arch = {13, 8, 4};
  c.top_arch = {8, 1};
  return c;
}

std::vector<Batch> small_batches(const ModelConfig& c, std::size_t batch, std::size_t count,
                                 uint64_t seed) {
  SynthSpec s;
  s.num_samples = batch * count;
  s.table_rows = c.table_rows;
  s.seed = seed;
  std::vector<Example> ex;
  for (const auto& r : generate_synthetic(s)) ex.push_back(to_example(r, c.table_rows));
  return make_batches(ex, batch, true);
}

TEST(GradScale, AbsentForZeroOrEmpty) {
  EXPECT_FALSE(local_grad_scale(std::vector<float>{}, 8).has_value());
  EXPECT_FALSE(local_grad_scale(std::vector<float>{0, 0}, 8).has_value());
  EXPECT_FLOAT_EQ(local_grad_scale(std::vector<float>{0.5f, -1.27f}, 8)->value, 0.01f);
  EXPECT_THROW(local_grad_scale(std::vector<float>{INFINITY}, 8), Error);
}

TEST(GradScale, UnifyTakesMaxAndSkipsAbsent) {
  const std::vector<std::optional<Scale>> s{std::nullopt, Scale{0.2f}, Scale{0.7f}, std::nullopt};
  EXPECT_FLOAT_EQ(unify_scales(s, 8).value, 0.7f);
  const std::vector<std::optional<Scale>> none(3);
  EXPECT_FLOAT_EQ(unify_scales(none, 16).value, 1.0f / 32767.0f);
}

TEST(GradScale, MaxUnifiedScaleNeverClips) {
  Rng rng(1);
  std::vector<std::vector<float>> nodes(5, std::vector<float>(300));
  std::vector<std::optional<Scale>> local;
  for (auto& n : nodes) {
    const double spread = std::exp(rng.uniform(-4, 4));
    for (auto& v : n) v = static_cast<float>(rng.normal() * spread);
    local.push_back(local_grad_scale(n, 8));
  }
  const Scale s = unify_scales(local, 8);
  std::vector<int32_t> codes(300);
  for (auto& n : nodes) EXPECT_EQ(quantize_grad(n, s, 8, codes), 0u);
  EXPECT_GT(quantize_grad(std::vector<float>{1000.0f}, s, 8, std::span<int32_t>(codes).first(1)), 0u);
}

TEST(Allreduce, IntegerSumsAreExact) {
  // Eight nodes at the 16-bit extreme; the sum leaves the int16 and int32 ranges.
  std::vector<std::vector<int32_t>> codes(8, std::vector<int32_t>{32767, -32767, 1});
  std::vector<int64_t> sums(3);
  allreduce_sum_dense(codes, sums);
  EXPECT_EQ(sums, (std::vector<int64_t>{8 * 32767, -8 * 32767, 8}));
}

TEST(Allreduce, FloatSumsInRankOrder) {
  std::vector<std::vector<float>> v{{1e8f}, {1.0f}, {-1e8f}, {1.0f}};
  std::vector<float> sums(1);
  allreduce_sum_dense(v, sums);
  float want = 0.0f;
  for (const auto& n : v) want += n[0];
  EXPECT_EQ(sums[0], want);
}

TEST(Allreduce, SparseUnion) {
  SparseGradient<float> a, b;
  a.dim = b.dim = 2;
  a.indices = {1, 4};
  a.values = {1, 1, 2, 2};
  b.indices = {0, 4};
  b.values = {5, 5, 3, 3};
  const std::vector<SparseGradient<float>> parts{a, b};
  const auto u = allreduce_union_sparse<float>(parts);
  EXPECT_EQ(u.indices, (std::vector<uint32_t>{0, 1, 4}));
  EXPECT_EQ(u.values, (std::vector<float>{5, 5, 1, 1, 5, 5}));
}

TEST(Allreduce, DequantAverage) {
  std::vector<float> out(2);
  dequant_average(std::vector<int64_t>{7, -3}, Scale{0.5f}, 4, out);
  EXPECT_FLOAT_EQ(out[0], 0.875f);
  EXPECT_FLOAT_EQ(out[1], -0.375f);
}

TEST(Wire, EncodingsRoundTripLittleEndian) {
  EXPECT_EQ(encode_codes(std::vector<int32_t>{-2}, 16), (std::vector<uint8_t>{0xFE, 0xFF}));
  EXPECT_EQ(encode_codes(std::vector<int32_t>{-2, 127}, 8), (std::vector<uint8_t>{0xFE, 0x7F}));
  const std::vector<int32_t> c{-32767, 0, 32767, 5};
  EXPECT_EQ(decode_codes(encode_codes(c, 16), 16), c);
  EXPECT_THROW(decode_codes(std::vector<uint8_t>{0x80}, 8), Error);  // -128 is outside the range
  EXPECT_EQ(decode_scale(encode_scale(Scale{0.1f})).value, 0.1f);
  EXPECT_EQ(encode_scale(Scale{1.0f}), (std::vector<uint8_t>{0, 0, 0x80, 0x3F}));
  const std::vector<float> f{1.5f, -0.0f};
  EXPECT_EQ(decode_fp32(encode_fp32(f)), f);
  const std::vector<uint32_t> idx{0, 7, 0xFFFFFFFFu};
  EXPECT_EQ(encode_indices(idx, 8).size(), 24u);
  EXPECT_EQ(decode_indices(encode_indices(idx, 4), 4), idx);
  EXPECT_EQ(decode_indices(encode_indices(idx, 8), 8), idx);
  EXPECT_THROW(decode_indices(std::vector<uint8_t>(7, 0), 8), Error);
}

TEST(Accounting, SumsByKind) {
  std::vector<WireMessage> m{
      {MessageKind::kScale, 0, 0, std::vector<uint8_t>(4)},
      {MessageKind::kDenseValues, 0, 0, std::vector<uint8_t>(10)},
      {MessageKind::kSparseIndices, 1, 3, std::vector<uint8_t>(16)},
      {MessageKind::kSparseValues, 1, 3, std::vector<uint8_t>(8)},
  };
  const CommRecord r = account_bytes(m);
  EXPECT_EQ(r.scale_bytes, 4u);
  EXPECT_EQ(r.phase2_bytes(), 34u);
  EXPECT_EQ(r.total(), 38u);
}

TEST(Accounting, ClosedFormByHand) {
  const ModelConfig c = small_config();
  const std::vector<std::size_t> unique{3, 2, 4, 1};
  const std::size_t mlp = c.dense_param_count();
  DpConfig dp{2, 8, EcMode::kMlp, true, 4};
  CommRecord r = closed_form_bytes(c, dp, unique);
  EXPECT_EQ(r.dense_grad_bytes, mlp);
  EXPECT_EQ(r.scale_bytes, 4u * (c.num_layers() * 2 + 4));
  EXPECT_EQ(r.sparse_index_bytes, 10u * 4u);
  EXPECT_EQ(r.sparse_value_bytes, 10u * 4u);
  dp.grad_bits = 32;
  dp.sparse_emb = false;
  r = closed_form_bytes(c, dp, unique);
  EXPECT_EQ(r.scale_bytes, 0u);
  EXPECT_EQ(r.dense_grad_bytes, 4u * (mlp + 97u * 4u));
}

TEST(Accounting, KaggleReport) {
  const ModelConfig k = kaggle_config();
  const auto rows = comm_report(k, 128, 8);
  ASSERT_EQ(rows.size(), 4u);
  std::size_t unique = 0;
  for (auto r : k.table_rows) unique += std::min<std::size_t>(r, 128);
  EXPECT_EQ(rows[0].bytes.total(), 4u * (475985u + 33762577u * 16u));
  EXPECT_EQ(rows[1].bytes.total(), 4u * 475985u + 8u * unique + 4u * 16u * unique);
  EXPECT_EQ(rows[3].bytes.dense_grad_bytes, 475985u);
  EXPECT_EQ(rows[3].bytes.sparse_value_bytes, 16u * unique);
  EXPECT_EQ(uncompressed_grad_bytes(k), rows[0].bytes.total());
}

TEST(ErrorFeedback, CorrectAndUpdate) {
  std::vector<float> corrected(2), buffer{0.25f, -0.5f};
  ec_correct(std::vector<float>{1.0f, 1.0f}, buffer, corrected);
  EXPECT_EQ(corrected, (std::vector<float>{1.25f, 0.5f}));
  ec_update(corrected, std::vector<float>{1.0f, 0.75f}, buffer);
  EXPECT_EQ(buffer, (std::vector<float>{0.25f, -0.25f}));
  EXPECT_THROW(ec_correct(std::vector<float>{1.0f}, buffer, corrected), Error);
}

TEST(ErrorFeedback, RowWise) {
  std::vector<float> table(10, 0.0f);
  table[4] = 1.0f;  // row 2, dim 2
  SparseGradient<float> g;
  g.dim = 2;
  g.indices = {2, 3};
  g.values = {1, 1, 1, 1};
  ec_correct_rows(g, table);
  EXPECT_EQ(g.values, (std::vector<float>{2, 1, 1, 1}));
  ec_update_rows(g, std::vector<float>{2, 0.5f, 1, 1}, table);
  EXPECT_EQ(table[4], 0.0f);
  EXPECT_EQ(table[5], 0.5f);
  EXPECT_EQ(table[0], 0.0f);
}

TEST(ErrorFeedback, BufferShapes) {
  const ModelConfig c = small_config();
  const ErrorBuffer none(c, EcMode::kNone), mlp(c, EcMode::kMlp), all(c, EcMode::kAll);
  EXPECT_FALSE(none.covers_dense());
  EXPECT_TRUE(mlp.covers_dense());
  EXPECT_FALSE(mlp.covers_tables());
  EXPECT_EQ(mlp.dense(0).size(), 13u * 8u);
  EXPECT_EQ(all.table(2).size(), 50u * 4u);
  EXPECT_EQ(parse_ec_mode("all"), EcMode::kAll);
  EXPECT_THROW(parse_ec_mode("some"), Error);
}

TEST(DpTrainer, SingleNodeMatchesPlainSgd) {
  ModelConfig c = small_config();
  Model<float> init(c);
  init.init(1);
  Model<float> plain = init;
  DataParallelTrainer dp(init, DpConfig{1, 32, EcMode::kMlp, true, 8});
  const auto batches = small_batches(c, 16, 10, 1);
  for (std::size_t i = 0; i < batches.size(); ++i) {
    ForwardCache<float> cache;
    plain.forward(batches[i], static_cast<int64_t>(i), cache);
    plain.apply_gradients(plain.loss_and_backward(batches[i], cache), static_cast<float>(c.lr));
    dp.step(batches[i], static_cast<int64_t>(i));
  }
  EXPECT_EQ(plain.checksum(), dp.replica(0).checksum());
}

TEST(DpTrainer, RejectsUnevenSplit) {
  Model<float> init(small_config());
  init.init(1);
  DataParallelTrainer dp(init, DpConfig{3, 32, EcMode::kMlp, true, 8});
  try {
    dp.step(small_batches(small_config(), 16, 1, 1)[0], 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(DpTrainer, QuantizedReplicasStayInSync) {
  const ModelConfig c = small_config();
  Model<float> init(c);
  init.init(2);
  for (EcMode ec : {EcMode::kNone, EcMode::kMlp, EcMode::kAll}) {
    for (bool sparse : {true, false}) {
      DataParallelTrainer dp(init, DpConfig{4, 8, ec, sparse, 8});
      for (const auto& b : small_batches(c, 16, 15, 2)) {
        const auto r = dp.step(b, 0);
        EXPECT_EQ(r.clipped, 0u);
        EXPECT_EQ(r.node_loss.size(), 4u);
      }
      for (std::size_t n = 0; n < 4; ++n) {
        EXPECT_EQ(dp.replica(n).checksum(), dp.replica(0).checksum());
        EXPECT_TRUE(dp.error_buffer(n).all_finite());
      }
    }
  }
}

TEST(DpTrainer, CommBytesMatchMessages) {
  const ModelConfig c = small_config();
  Model<float> init(c);
  init.init(3);
  DataParallelTrainer dp(init, DpConfig{2, 16, EcMode::kAll, true, 4});
  const auto r = dp.step(small_batches(c, 8, 1, 3)[0], 0);
  EXPECT_EQ(account_bytes(dp.last_messages()), r.comm);
  EXPECT_GT(r.comm.sparse_index_bytes, 0u);
  EXPECT_EQ(r.comm.dense_grad_bytes, 2u * 2u * c.dense_param_count());
}

TEST(SimulatedDp, Fp32MatchesLockstep) {
  const ModelConfig c = small_config();
  Model<float> init(c);
  init.init(4);
  Model<float> sim_model = init;
  for (bool sparse : {true, false}) {
    sim_model = init;
    const DpConfig dp{4, 32, EcMode::kMlp, sparse, 8};
    SimulatedDpTrainer sim(sim_model, dp);
    DataParallelTrainer real(init, dp);
    int64_t it = 0;
    for (const auto& b : small_batches(c, 16, 12, 4)) {
      for (std::size_t n = 0; n < 4; ++n) sim.step(b.slice(n * 4, n * 4 + 4));
      real.step(b, it++);
    }
    EXPECT_EQ(sim.updates(), 12);
    EXPECT_EQ(sim_model.checksum(), real.replica(0).checksum()) << "sparse " << sparse;
  }
}

TEST(SimulatedDp, GroupsAndFlush) {
  const ModelConfig c = small_config();
  Model<float> m(c);
  m.init(5);
  SimulatedDpTrainer sim(m, DpConfig{3, 8, EcMode::kAll, true, 8});
  const auto bs = small_batches(c, 4, 7, 5);
  int updates = 0;
  for (const auto& b : bs) updates += sim.step(b).updated ? 1 : 0;
  EXPECT_EQ(updates, 2);
  EXPECT_EQ(sim.microbatches(), 7);
  EXPECT_TRUE(sim.pending());
  const uint64_t before = m.checksum();
  EXPECT_TRUE(sim.flush());
  EXPECT_NE(m.checksum(), before);
  EXPECT_FALSE(sim.pending());
  EXPECT_FALSE(sim.flush());
  EXPECT_EQ(sim.updates(), 3);
  for (std::size_t slot = 0; slot < 3; ++slot) EXPECT_TRUE(sim.error_buffer(slot).all_finite());
}

}  // namespace
}  // namespace dqrm
