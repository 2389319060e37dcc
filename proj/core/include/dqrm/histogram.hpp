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

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "dqrm/embedding.hpp"

namespace dqrm {

struct Histogram {
  double low = 0.0;
  double high = 0.0;
  std::vector<uint64_t> counts;

  double bin_width() const { return (high - low) / static_cast<double>(counts.size()); }
  uint64_t total() const;
};

// Equal-width bins over [low, high); values outside clamp into the end bins.
Histogram weight_histogram(std::span<const float> values, std::size_t num_bins,
                           double low, double high);

struct TableHistograms {
  Histogram master;
  Histogram quantized;  // forward-pass view; equals master when unquantized
};

TableHistograms table_histograms(const EmbeddingTable<float>& table,
                                 std::size_t num_bins, double low, double high);

// "bin_low bin_high count" per line.
void write_histogram(std::ostream& out, const Histogram& h);

}  // namespace dqrm
