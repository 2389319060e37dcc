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
#include <span>
#include <string>
#include <vector>

#include "dqrm/allreduce.hpp"
#include "dqrm/model.hpp"
#include "dqrm/quantizer.hpp"

namespace dqrm {

enum class MessageKind { kScale, kDenseValues, kSparseIndices, kSparseValues };

// One serialized payload a node puts on the wire. Multi-byte fields are
// little-endian; there are no headers, the shapes are known to all nodes.
struct WireMessage {
  MessageKind kind = MessageKind::kDenseValues;
  uint32_t node = 0;
  uint32_t tensor = 0;
  std::vector<uint8_t> bytes;
};

std::vector<uint8_t> encode_scale(Scale s);
Scale decode_scale(std::span<const uint8_t> bytes);
// 1 byte per code for 8 bits, 2 bytes for 16.
std::vector<uint8_t> encode_codes(std::span<const int32_t> codes, int bits);
std::vector<int32_t> decode_codes(std::span<const uint8_t> bytes, int bits);
std::vector<uint8_t> encode_fp32(std::span<const float> values);
std::vector<float> decode_fp32(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_indices(std::span<const uint32_t> indices,
                                    std::size_t index_bytes);
std::vector<uint32_t> decode_indices(std::span<const uint8_t> bytes,
                                     std::size_t index_bytes);

struct CommRecord {
  uint64_t dense_grad_bytes = 0;
  uint64_t sparse_index_bytes = 0;
  uint64_t sparse_value_bytes = 0;
  uint64_t scale_bytes = 0;

  uint64_t phase1_bytes() const { return scale_bytes; }
  uint64_t phase2_bytes() const {
    return dense_grad_bytes + sparse_index_bytes + sparse_value_bytes;
  }
  uint64_t total() const { return phase1_bytes() + phase2_bytes(); }
  CommRecord& operator+=(const CommRecord& o);
  friend bool operator==(const CommRecord&, const CommRecord&) = default;
};

// Sums the byte lengths of the given messages by kind.
CommRecord account_bytes(std::span<const WireMessage> messages);

// Closed-form bytes one node sends per iteration.
struct CommEstimate {
  std::string setting;
  CommRecord bytes;
};

// Every dense and embedding parameter sent as FP32.
uint64_t uncompressed_grad_bytes(const ModelConfig& config);

// Rows: uncompressed, sparse fp32, sparse int16, sparse int8. Sparse rows
// assume single-hot lookups with min(rows, local_batch) unique indices per
// table. local_batch == 0 reports the MLP share only.
std::vector<CommEstimate> comm_report(const ModelConfig& config,
                                      std::size_t local_batch,
                                      std::size_t index_bytes);

// The message sizes for one node and one tensor shape under `cfg`.
CommRecord closed_form_bytes(const ModelConfig& config, const DpConfig& cfg,
                             std::span<const std::size_t> unique_rows);

}  // namespace dqrm
