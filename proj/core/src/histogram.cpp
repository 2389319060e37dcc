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

#include "dqrm/histogram.hpp"

#include <cmath>
#include <numeric>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

class Binner {
 public:
  Binner(std::size_t bins, double low, double high) : h_{low, high, std::vector<uint64_t>(bins, 0)} {
    if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "histogram needs at least one bin");
    if (!(high > low) || !std::isfinite(low) || !std::isfinite(high)) {
      throw Error(ErrorCode::kInvalidArgument, "histogram range must satisfy low < high");
    }
  }

  void add(double v) {
    const double pos = (v - h_.low) / (h_.high - h_.low) * static_cast<double>(h_.counts.size());
    std::size_t bin = 0;
    if (pos >= static_cast<double>(h_.counts.size())) {
      bin = h_.counts.size() - 1;
    } else if (pos > 0.0) {
      bin = static_cast<std::size_t>(pos);
    }
    ++h_.counts[bin];
  }

  Histogram take() { return std::move(h_); }

 private:
  Histogram h_;
};

}  // namespace

uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

Histogram weight_histogram(std::span<const float> values, std::size_t num_bins,
                           double low, double high) {
  Binner binner(num_bins, low, high);
  for (float v : values) binner.add(v);
  return binner.take();
}

TableHistograms table_histograms(const EmbeddingTable<float>& table,
                                 std::size_t num_bins, double low, double high) {
  Binner master(num_bins, low, high);
  Binner quantized(num_bins, low, high);
  std::vector<float> row(table.dim());
  const bool have_view = !table.quantization_active() || table.scale().has_value();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (float v : table.row(r)) master.add(v);
    if (have_view) {
      table.effective_row(r, row);
      for (float v : row) quantized.add(v);
    }
  }
  if (!have_view) {
    // No frozen scale yet: quantize with the one the next refresh would pick.
    const auto& spec = *table.quant_spec();
    const Scale s = compute_scale<float>(table.weights(), spec);
    for (float v : table.weights()) quantized.add(fake_quantize_value(v, s, spec.qmax()));
  }
  return {master.take(), quantized.take()};
}

void write_histogram(std::ostream& out, const Histogram& h) {
  const double w = h.bin_width();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << (h.low + w * static_cast<double>(i)) << ' '
        << (h.low + w * static_cast<double>(i + 1)) << ' ' << h.counts[i] << '\n';
  }
}

}  // namespace dqrm
