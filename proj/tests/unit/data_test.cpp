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
#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dqrm/criteo.hpp"
#include "dqrm/error.hpp"
#include "dqrm/synthetic.hpp"

namespace dqrm {
namespace {

std::string sample_line() {
  std::string s = "1\t5\t\t-3";
  for (int i = 3; i < 13; ++i) s += "\t" + std::to_string(i);
  s += "\t68fd1e64";
  for (int i = 1; i < 26; ++i) s += i == 4 ? "\t" : "\t0a1b2c3d";
  return s;
}

TEST(Criteo, ParseFields) {
  const RawRecord r = parse_criteo_line(sample_line(), 1);
  EXPECT_EQ(r.label, 1);
  EXPECT_EQ(r.dense[0], 5);
  EXPECT_FALSE(r.dense[1].has_value());
  EXPECT_EQ(r.dense[2], -3);
  EXPECT_EQ(r.categorical[0], "68fd1e64");
  EXPECT_EQ(r.categorical[4], "");
  EXPECT_EQ(format_criteo_line(r), sample_line());
  EXPECT_EQ(parse_criteo_line(sample_line() + "\r", 1), r);
}

TEST(Criteo, MalformedLinesNameTheLine) {
  auto expect_bad = [](const std::string& line) {
    try {
      parse_criteo_line(line, 42);
      FAIL() << line;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
      EXPECT_NE(std::string(e.what()).find("line 42"), std::string::npos);
    }
  };
  expect_bad("1\t2\t3");
  std::string bad_label = sample_line();
  bad_label[0] = '2';
  expect_bad(bad_label);
  std::string bad_int = sample_line();
  bad_int.replace(2, 1, "x");
  expect_bad(bad_int);
}

TEST(Criteo, DenseTransform) {
  EXPECT_FLOAT_EQ(dense_transform(std::nullopt), 0.0f);
  EXPECT_FLOAT_EQ(dense_transform(-7), 0.0f);
  EXPECT_FLOAT_EQ(dense_transform(int64_t{0}), 0.0f);
  EXPECT_FLOAT_EQ(dense_transform(int64_t{9}), static_cast<float>(std::log(10.0)));
}

TEST(Criteo, Fnv1aReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Criteo, HashModRows) {
  EXPECT_EQ(hash_categorical("", 100), 0u);
  EXPECT_EQ(hash_categorical("foobar", 1000), 0x85944171f73967e8ULL % 1000);
  EXPECT_THROW(hash_categorical("a", 0), Error);
}

TEST(Criteo, ToExampleUsesLeadingFields) {
  const RawRecord r = parse_criteo_line(sample_line(), 1);
  const std::vector<std::size_t> rows{10, 20};
  const Example e = to_example(r, rows);
  EXPECT_EQ(e.dense.size(), 13u);
  ASSERT_EQ(e.sparse.size(), 2u);
  EXPECT_EQ(e.sparse[0], fnv1a64("68fd1e64") % 10);
  EXPECT_EQ(e.label, 1.0f);
  EXPECT_THROW(to_example(r, std::vector<std::size_t>(27, 5)), Error);
}

TEST(Criteo, ReadsPlainAndGzip) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto plain = dir / "dqrm_data_test.tsv";
  const auto gz = dir / "dqrm_data_test.tsv.gz";
  const std::string text = sample_line() + "\n" + sample_line() + "\n";
  std::ofstream(plain) << text;
  gzFile f = gzopen(gz.c_str(), "wb");
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  const std::vector<std::size_t> rows{100, 100, 100};
  const auto a = read_criteo_file(plain, rows);
  const auto b = read_criteo_file(gz, rows);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(read_criteo_file(plain, rows, 1).size(), 1u);
  std::filesystem::remove(plain);
  std::filesystem::remove(gz);
  try {
    read_criteo_file(plain, rows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Synthetic, DeterministicAndParsable) {
  SynthSpec s;
  s.num_samples = 500;
  s.table_rows = {50, 9, 1000};
  const auto a = generate_synthetic(s);
  EXPECT_EQ(a, generate_synthetic(s));
  std::ostringstream out;
  write_criteo_tsv(out, a);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(parse_criteo_line(line, n + 1), a[n]);
    ++n;
  }
  EXPECT_EQ(n, 500u);
  for (const auto& r : a) EXPECT_LT(synthetic_id(r.categorical[1]), 9u);
  s.seed = 2;
  EXPECT_NE(a, generate_synthetic(s));
}

TEST(Synthetic, UniformWhenSkewIsZero) {
  SynthSpec s;
  s.num_samples = 20000;
  s.table_rows = {10};
  s.skew = 0.0;
  std::vector<double> counts(10, 0.0);
  for (const auto& r : generate_synthetic(s)) counts[synthetic_id(r.categorical[0])] += 1;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  EXPECT_LT(chi2, 27.88);  // 99.9th percentile, 9 degrees of freedom
}

TEST(Synthetic, SkewFavoursSmallIds) {
  SynthSpec s;
  s.num_samples = 20000;
  s.table_rows = {1000};
  s.skew = 1.2;
  std::size_t head = 0;
  for (const auto& r : generate_synthetic(s)) head += synthetic_id(r.categorical[0]) < 10 ? 1 : 0;
  EXPECT_GT(head, 20000u / 3);
}

TEST(Synthetic, FullNoiseBalancesLabels) {
  SynthSpec s;
  s.num_samples = 40000;
  s.table_rows = {100, 100};
  s.label_noise = 0.5;
  double pos = 0;
  for (const auto& r : generate_synthetic(s)) pos += r.label;
  EXPECT_NEAR(pos / 40000.0, 0.5, 0.01);
}

TEST(Synthetic, RejectsBadSpecs) {
  SynthSpec s;
  s.table_rows = {};
  EXPECT_THROW(generate_synthetic(s), Error);
  s.table_rows = std::vector<std::size_t>(27, 10);
  EXPECT_THROW(generate_synthetic(s), Error);
  s.table_rows = {10};
  s.label_noise = 1.5;
  EXPECT_THROW(generate_synthetic(s), Error);
}

}  // namespace
}  // namespace dqrm
