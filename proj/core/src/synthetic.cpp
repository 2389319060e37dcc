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

#include "dqrm/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "dqrm/error.hpp"
#include "dqrm/rng.hpp"

namespace dqrm {

namespace {

constexpr double kBias = -0.8;
constexpr double kDenseWeight = 0.35;
constexpr std::size_t kSignalDense = 4;
constexpr double kTableWeight = 0.6;
constexpr double kPairWeight = 1.2;

// Pseudo-random value in [-1, 1) keyed by (salt, a, b).
double effect(uint64_t salt, uint64_t a, uint64_t b) {
  const uint64_t h = splitmix64(salt ^ splitmix64(a * 0x9e3779b97f4a7c15ULL + b));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

class ZipfSampler {
 public:
  ZipfSampler(std::size_t rows, double skew) : rows_(rows) {
    if (skew == 0.0) return;
    cdf_.resize(rows);
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      acc += std::pow(static_cast<double>(r + 1), -skew);
      cdf_[r] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }

  uint32_t sample(Rng& rng) const {
    if (cdf_.empty()) return static_cast<uint32_t>(rng.uniform_int(rows_));
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<uint32_t>(std::min<std::size_t>(it - cdf_.begin(), rows_ - 1));
  }

 private:
  std::size_t rows_;
  std::vector<double> cdf_;
};

std::string hex8(uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return std::string(buf, 8);
}

}  // namespace

void SynthSpec::validate() const {
  if (table_rows.empty() || table_rows.size() > kCriteoCategorical) {
    throw Error(ErrorCode::kConfig, "synthetic data needs 1..26 tables");
  }
  for (std::size_t r : table_rows) {
    if (r == 0 || r > 0xffffffffULL) throw Error(ErrorCode::kConfig, "table rows out of range");
  }
  if (!(skew >= 0.0) || !std::isfinite(skew)) throw Error(ErrorCode::kConfig, "skew must be >= 0");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw Error(ErrorCode::kConfig, "label noise must lie in [0, 1]");
  }
}

std::vector<RawRecord> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::size_t tables = spec.table_rows.size();
  std::vector<ZipfSampler> samplers;
  samplers.reserve(tables);
  for (std::size_t r : spec.table_rows) samplers.emplace_back(r, spec.skew);

  Rng rng(spec.seed);
  const uint64_t salt = splitmix64(spec.seed ^ 0x5deece66dULL);
  std::vector<RawRecord> out(spec.num_samples);
  std::vector<uint32_t> ids(tables);
  for (RawRecord& rec : out) {
    double logit = kBias;
    for (std::size_t f = 0; f < kCriteoDense; ++f) {
      const double u = rng.uniform();
      const double g = rng.normal();
      if (u < 0.05) continue;  // missing
      const int64_t v = static_cast<int64_t>(std::floor(std::exp(1.0 + 1.2 * g)));
      rec.dense[f] = v;
      if (f < kSignalDense) {
        const double sign = (f % 2 == 0) ? 1.0 : -1.0;
        logit += sign * kDenseWeight * (std::log1p(static_cast<double>(v)) - 1.3);
      }
    }
    for (std::size_t t = 0; t < tables; ++t) {
      ids[t] = samplers[t].sample(rng);
      rec.categorical[t] = hex8(ids[t]);
      logit += kTableWeight * effect(salt, t, ids[t]);
    }
    for (std::size_t p = 0; p + 1 < std::min<std::size_t>(tables, 4); p += 2) {
      const uint64_t key = (static_cast<uint64_t>(ids[p]) << 32) | ids[p + 1];
      logit += kPairWeight * effect(salt + 1 + p, key, 0);
    }
    const double prob = 1.0 / (1.0 + std::exp(-logit));
    int label = rng.uniform() < prob ? 1 : 0;
    if (rng.uniform() < spec.label_noise) label = 1 - label;
    rec.label = label;
  }
  return out;
}

uint32_t synthetic_id(const std::string& field) {
  uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v, 16);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kMalformedRecord, "not a synthetic id: " + field);
  }
  return v;
}

}  // namespace dqrm
