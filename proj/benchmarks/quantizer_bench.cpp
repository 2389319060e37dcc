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

#include <benchmark/benchmark.h>

#include <vector>

#include "dqrm/metrics.hpp"
#include "dqrm/quantizer.hpp"
#include "dqrm/rng.hpp"

namespace {

std::vector<float> random_values(std::size_t n) {
  dqrm::Rng rng(1);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

void BM_ComputeScale(benchmark::State& state) {
  const auto v = random_values(static_cast<std::size_t>(state.range(0)));
  const dqrm::QuantSpec spec{4, dqrm::Granularity::kPerTable, 1};
  for (auto _ : state) benchmark::DoNotOptimize(dqrm::compute_scale<float>(v, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeScale)->Arg(1 << 12)->Arg(1 << 20)->Arg(1 << 24);

void BM_FakeQuantize(benchmark::State& state) {
  const auto v = random_values(1 << 16);
  const dqrm::QuantSpec spec{static_cast<int>(state.range(0)), dqrm::Granularity::kPerTable, 1};
  const dqrm::Scale s = dqrm::compute_scale<float>(v, spec);
  std::vector<float> out(v.size());
  for (auto _ : state) {
    dqrm::fake_quantize<float>(v, s, spec, out);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(v.size()));
}
BENCHMARK(BM_FakeQuantize)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_PackInt4(benchmark::State& state) {
  dqrm::Rng rng(2);
  std::vector<int32_t> codes(1 << 16);
  for (auto& c : codes) c = static_cast<int32_t>(rng.uniform_int(15)) - 7;
  for (auto _ : state) {
    auto packed = dqrm::pack_int4(codes);
    benchmark::DoNotOptimize(dqrm::unpack_int4(packed, codes.size()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(codes.size()));
}
BENCHMARK(BM_PackInt4);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  dqrm::Rng rng(3);
  std::vector<double> scores(n);
  std::vector<float> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.bernoulli(scores[i]) ? 1.0f : 0.0f;
  }
  for (auto _ : state) benchmark::DoNotOptimize(dqrm::roc_auc(scores, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocAuc)->Arg(1 << 10)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace
