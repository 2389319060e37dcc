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

// Quantized model file.
//
// All multi-byte fields are little-endian.
//
//   "DQRM"                      4-byte magic
//   u32 version                 currently 1
//   u32 dense_in, u32 num_tables, u32 embed_dim
//   u32 n, u32[n]               bottom MLP widths (input first)
//   u32 n, u32[n]               top MLP widths (input excluded)
//   u8 emb_bits, u8 mlp_bits, u8 mlp_granularity (1 channel, 2 matrix),
//   u8 act_bits                 32 = not quantized
//   u32 period
//   u64[num_tables]             table rows
//   per table:  f32 scale, weight payload (R*d codes)
//   per layer:  f32[num_scales], weight payload (out*in codes), f32[out] bias
//
// Payload packing follows the bit-width: 2- and 4-bit codes two per byte via
// pack_int4, 8-bit codes as int8, 16-bit as int16, 32 as raw f32 master
// weights. num_scales is out (channel-wise), 1 (matrix-wise) or 0 (f32).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dqrm/model.hpp"

namespace dqrm {

inline constexpr uint32_t kModelFormatVersion = 1;

// Bytes needed for `count` codes at `bits` (see payload packing above).
std::size_t packed_payload_bytes(std::size_t count, int bits);

struct ModelSizeBreakdown {
  std::size_t header = 0;
  std::size_t table_scales = 0;
  std::size_t table_payload = 0;
  std::size_t mlp_scales = 0;
  std::size_t mlp_payload = 0;
  std::size_t mlp_bias = 0;

  std::size_t embedding_bytes() const { return table_scales + table_payload; }
  std::size_t total() const {
    return header + table_scales + table_payload + mlp_scales + mlp_payload +
           mlp_bias;
  }
};

// Closed-form size of the exported file for a config.
ModelSizeBreakdown exported_model_size(const ModelConfig& config);

// Uses the model's frozen scales where they exist, fresh ones otherwise.
std::vector<uint8_t> serialize_model(const Model<float>& model);
// The returned model's master weights are the dequantized stored codes and
// its scales are the stored scales, so predict() reproduces the exporter's
// fake-quantized forward bit for bit.
// Errors: kBadMagic, kBadVersion, kTruncated, kConfig.
Model<float> deserialize_model(std::span<const uint8_t> bytes);

void export_model(const Model<float>& model, const std::filesystem::path& path);
Model<float> import_model(const std::filesystem::path& path);

}  // namespace dqrm
