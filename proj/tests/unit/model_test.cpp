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
#include <filesystem>
#include <vector>

#include "dqrm/batch.hpp"
#include "dqrm/criteo.hpp"
#include "dqrm/error.hpp"
#include "dqrm/histogram.hpp"
#include "dqrm/model.hpp"
#include "dqrm/model_io.hpp"
#include "dqrm/rng.hpp"
#include "dqrm/synthetic.hpp"

namespace dqrm {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.table_rows = {20, 7, 33};
  c.num_tables = 3;
  c.embed_dim = 4;
  c.bottom_arch = {13, 8, 4};
  c.top_arch = {6, 1};
  return c;
}

std::vector<Example> tiny_examples(const ModelConfig& c, std::size_t n, uint64_t seed) {
  SynthSpec spec;
  spec.num_samples = n;
  spec.table_rows = c.table_rows;
  spec.seed = seed;
  std::vector<Example> out;
  for (const auto& r : generate_synthetic(spec)) out.push_back(to_example(r, c.table_rows));
  return out;
}

TEST(ModelConfig, KaggleShape) {
  const ModelConfig k = kaggle_config();
  EXPECT_EQ(k.num_tables, 26u);
  EXPECT_EQ(k.top_input(), 16u + 27u * 26u / 2u);
  EXPECT_EQ(k.dense_param_count(), 475985u);
  std::size_t rows = 0;
  for (auto r : k.table_rows) rows += r;
  EXPECT_EQ(rows, 33762577u);
  EXPECT_EQ(k.embedding_param_count(), 33762577u * 16u);
}

TEST(ModelConfig, ValidateRejectsInconsistentShapes) {
  ModelConfig c = tiny_config();
  c.bottom_arch.back() = 5;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.top_arch.back() = 2;
  EXPECT_THROW(c.validate(), Error);
  c = tiny_config();
  c.emb_bits = 3;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Loss, BceAndGradient) {
  const std::vector<double> logits{0.0, 2.0};
  const std::vector<float> labels{1.0f, 0.0f};
  std::vector<double> d(2);
  const double loss = bce_loss<double>(logits, labels, d);
  const double p1 = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(loss, (std::log(2.0) - std::log(1.0 - p1)) / 2.0, 1e-12);
  EXPECT_NEAR(d[0], (0.5 - 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(d[1], p1 / 2.0, 1e-12);
}

TEST(Loss, ClampsAndDetectsDivergence) {
  std::vector<double> d(1);
  const double l = bce_loss<double>(std::vector<double>{-1000.0}, std::vector<float>{1.0f}, d);
  EXPECT_NEAR(l, -std::log(1e-7), 1e-6);
  try {
    bce_loss<double>(std::vector<double>{std::nan("")}, std::vector<float>{1.0f}, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDiverged);
  }
}

TEST(Model, TrainingReducesLoss) {
  ModelConfig c = tiny_config();
  c.emb_bits = 8;
  c.mlp_bits = 8;
  Model<float> m(c);
  m.init(1);
  const Batch b = make_batch(tiny_examples(c, 64, 1));
  ForwardCache<float> cache;
  double first = 0, last = 0;
  for (int i = 0; i < 200; ++i) {
    m.forward(b, i, cache);
    const auto g = m.loss_and_backward(b, cache);
    if (i == 0) first = g.loss;
    last = g.loss;
    m.apply_gradients(g, 0.2f);
  }
  EXPECT_LT(last, first * 0.8);
}

TEST(Model, PredictUsesFrozenScalesAndIsConst) {
  Model<float> m(tiny_config());
  m.init(2);
  const Batch b = make_batch(tiny_examples(tiny_config(), 10, 2));
  ForwardCache<float> cache;
  const auto logits = m.forward(b, 0, cache);
  const std::vector<float> train(logits.begin(), logits.end());
  EXPECT_EQ(m.predict(b), train);
}

TEST(Model, ChecksumTracksParameters) {
  Model<float> a(tiny_config()), b(tiny_config());
  a.init(3);
  b.init(3);
  EXPECT_EQ(a.checksum(), b.checksum());
  b.tables()[1].mutable_weights()[0] += 1e-6f;
  EXPECT_NE(a.checksum(), b.checksum());
}

TEST(Model, DenseTensorOrder) {
  Model<float> m(tiny_config());
  ASSERT_EQ(m.num_dense_tensors(), 8u);
  EXPECT_EQ(m.dense_tensor(0).size(), 13u * 8u);
  EXPECT_EQ(m.dense_tensor(1).size(), 8u);
  EXPECT_EQ(m.dense_tensor(2).size(), 8u * 4u);
  EXPECT_EQ(m.dense_tensor(4).size(), 6u * m.config().top_input());
  EXPECT_EQ(m.dense_tensor(5).size(), 6u);
  EXPECT_EQ(m.dense_tensor(6).size(), 6u);
  EXPECT_EQ(m.dense_tensor(7).size(), 1u);
}

TEST(Batch, SliceAndUnbatch) {
  const auto ex = tiny_examples(tiny_config(), 10, 4);
  const Batch b = make_batch(ex);
  b.validate(tiny_config().table_rows);
  const Batch s = b.slice(3, 7);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.offsets[0].front(), 0u);
  const auto batches = make_batches(ex, 4, false);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches.back().size(), 2u);
  EXPECT_EQ(make_batches(ex, 4, true).size(), 2u);
  EXPECT_EQ(unbatch(batches), ex);
}

class ModelIo : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(ModelIo, RoundTripReproducesPredictions) {
  ModelConfig c = tiny_config();
  c.emb_bits = GetParam().first;
  c.mlp_bits = GetParam().second;
  Model<float> m(c);
  m.init(5);
  const Batch b = make_batch(tiny_examples(c, 16, 5));
  ForwardCache<float> cache;
  m.forward(b, 0, cache);
  m.apply_gradients(m.loss_and_backward(b, cache), 0.1f);
  m.update_scales(0);

  const auto bytes = serialize_model(m);
  EXPECT_EQ(bytes.size(), exported_model_size(c).total());
  const Model<float> back = deserialize_model(bytes);
  EXPECT_EQ(back.predict(b), m.predict(b));
  EXPECT_EQ(serialize_model(back), bytes);
}

INSTANTIATE_TEST_SUITE_P(Widths, ModelIo,
                         ::testing::Values(std::pair{2, 4}, std::pair{4, 4}, std::pair{4, 8},
                                           std::pair{8, 16}, std::pair{16, 32}, std::pair{32, 32}));

TEST(ModelIoErrors, BadMagicVersionAndTruncation) {
  Model<float> m(tiny_config());
  m.init(6);
  auto bytes = serialize_model(m);
  auto expect_code = [](std::vector<uint8_t> b, ErrorCode code) {
    try {
      deserialize_model(b);
      FAIL() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  auto bad = bytes;
  bad[0] = 'X';
  expect_code(bad, ErrorCode::kBadMagic);
  bad = bytes;
  bad[4] = 99;
  expect_code(bad, ErrorCode::kBadVersion);
  expect_code(std::vector<uint8_t>(bytes.begin(), bytes.end() - 3), ErrorCode::kTruncated);
  bad = bytes;
  bad.push_back(0);
  expect_code(bad, ErrorCode::kTruncated);
}

TEST(ModelIoFiles, ExportImport) {
  const auto path = std::filesystem::temp_directory_path() / "dqrm_model_test.dqrm";
  Model<float> m(tiny_config());
  m.init(7);
  export_model(m, path);
  EXPECT_EQ(std::filesystem::file_size(path), exported_model_size(tiny_config()).total());
  const Model<float> back = import_model(path);
  EXPECT_EQ(back.config().table_rows, tiny_config().table_rows);
  std::filesystem::remove(path);
  EXPECT_THROW(import_model(path), Error);
}

TEST(ModelSize, KaggleInt4) {
  const auto s = exported_model_size(kaggle_config());
  EXPECT_EQ(s.table_payload, 33762577u * 16u / 2u);
  EXPECT_EQ(s.table_scales, 26u * 4u);
  EXPECT_NEAR(static_cast<double>(s.total()) / 1e9, 0.270, 0.0027);
  EXPECT_EQ(packed_payload_bytes(5, 4), 3u);
  EXPECT_EQ(packed_payload_bytes(5, 8), 5u);
  EXPECT_EQ(packed_payload_bytes(5, 16), 10u);
  EXPECT_EQ(packed_payload_bytes(5, 32), 20u);
}

TEST(Histogram, CountsAndClamp) {
  const std::vector<float> v{-5.0f, -0.9f, -0.1f, 0.0f, 0.3f, 0.99f, 5.0f};
  const Histogram h = weight_histogram(v, 4, -1.0, 1.0);
  EXPECT_EQ(h.counts, (std::vector<uint64_t>{2, 1, 2, 2}));
  EXPECT_EQ(h.total(), v.size());
  EXPECT_DOUBLE_EQ(h.bin_width(), 0.5);
}

TEST(Histogram, MatchesNaiveCounting) {
  Rng rng(12);
  std::vector<float> v(5000);
  for (auto& x : v) x = static_cast<float>(rng.normal() * 0.3);
  const std::size_t bins = 17;
  const double lo = -0.6, hi = 0.6;
  const Histogram h = weight_histogram(v, bins, lo, hi);
  std::vector<uint64_t> naive(bins, 0);
  const double w = (hi - lo) / bins;
  for (float x : v) {
    std::size_t hit = 0;
    if (x >= hi) {
      hit = bins - 1;
    } else if (x > lo) {
      for (std::size_t b = 0; b < bins; ++b) {
        if (x >= lo + b * w && x < lo + (b + 1) * w) hit = b;
      }
    }
    ++naive[hit];
  }
  EXPECT_EQ(h.counts, naive);
}

TEST(Histogram, QuantizedViewHasFewLevels) {
  EmbeddingTable<float> t(500, 4, QuantSpec{2, Granularity::kPerTable, 1});
  Rng rng(1);
  t.init_uniform(rng);
  t.maybe_update_scale(0);
  const auto h = table_histograms(t, 64, -0.05, 0.05);
  std::size_t occupied = 0;
  for (auto c : h.quantized.counts) occupied += c > 0 ? 1 : 0;
  EXPECT_LE(occupied, 3u);
  EXPECT_EQ(h.master.total(), 2000u);
}

}  // namespace
}  // namespace dqrm
