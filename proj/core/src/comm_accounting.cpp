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

#include "dqrm/comm_accounting.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

void put_le(std::vector<uint8_t>& out, uint64_t v, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t get_le(const uint8_t* p, std::size_t width) {
  uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t code_width(int bits) {
  if (bits == 8) return 1;
  if (bits == 16) return 2;
  throw Error(ErrorCode::kInvalidArgument, "codes are sent as 8 or 16 bits");
}

void check_multiple(std::size_t size, std::size_t width) {
  if (size % width != 0) throw Error(ErrorCode::kTruncated, "message length is not a whole number of fields");
}

}  // namespace

std::vector<uint8_t> encode_scale(Scale s) {
  std::vector<uint8_t> out;
  put_le(out, std::bit_cast<uint32_t>(s.value), 4);
  return out;
}

Scale decode_scale(std::span<const uint8_t> bytes) {
  if (bytes.size() != 4) throw Error(ErrorCode::kTruncated, "scale message must be 4 bytes");
  return Scale{std::bit_cast<float>(static_cast<uint32_t>(get_le(bytes.data(), 4)))};
}

std::vector<uint8_t> encode_codes(std::span<const int32_t> codes, int bits) {
  const std::size_t w = code_width(bits);
  const int32_t qmax = (1 << (bits - 1)) - 1;
  std::vector<uint8_t> out;
  out.reserve(codes.size() * w);
  for (int32_t c : codes) {
    if (c > qmax || c < -qmax) throw Error(ErrorCode::kCodeOutOfRange, "code out of range");
    put_le(out, static_cast<uint64_t>(static_cast<uint32_t>(c)), w);
  }
  return out;
}

std::vector<int32_t> decode_codes(std::span<const uint8_t> bytes, int bits) {
  const std::size_t w = code_width(bits);
  check_multiple(bytes.size(), w);
  std::vector<int32_t> out(bytes.size() / w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const uint64_t raw = get_le(bytes.data() + i * w, w);
    out[i] = w == 1 ? static_cast<int8_t>(raw) : static_cast<int16_t>(raw);
    if (out[i] == -(1 << (bits - 1))) throw Error(ErrorCode::kCodeOutOfRange, "code out of range");
  }
  return out;
}

std::vector<uint8_t> encode_fp32(std::span<const float> values) {
  std::vector<uint8_t> out;
  out.reserve(values.size() * 4);
  for (float v : values) put_le(out, std::bit_cast<uint32_t>(v), 4);
  return out;
}

std::vector<float> decode_fp32(std::span<const uint8_t> bytes) {
  check_multiple(bytes.size(), 4);
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(static_cast<uint32_t>(get_le(bytes.data() + 4 * i, 4)));
  }
  return out;
}

std::vector<uint8_t> encode_indices(std::span<const uint32_t> indices,
                                    std::size_t index_bytes) {
  if (index_bytes != 4 && index_bytes != 8) {
    throw Error(ErrorCode::kInvalidArgument, "index wire size must be 4 or 8");
  }
  std::vector<uint8_t> out;
  out.reserve(indices.size() * index_bytes);
  for (uint32_t i : indices) put_le(out, i, index_bytes);
  return out;
}

std::vector<uint32_t> decode_indices(std::span<const uint8_t> bytes,
                                     std::size_t index_bytes) {
  check_multiple(bytes.size(), index_bytes);
  std::vector<uint32_t> out(bytes.size() / index_bytes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const uint64_t v = get_le(bytes.data() + i * index_bytes, index_bytes);
    if (v > 0xffffffffULL) throw Error(ErrorCode::kIndexOutOfRange, "index out of range");
    out[i] = static_cast<uint32_t>(v);
  }
  return out;
}

CommRecord& CommRecord::operator+=(const CommRecord& o) {
  dense_grad_bytes += o.dense_grad_bytes;
  sparse_index_bytes += o.sparse_index_bytes;
  sparse_value_bytes += o.sparse_value_bytes;
  scale_bytes += o.scale_bytes;
  return *this;
}

CommRecord account_bytes(std::span<const WireMessage> messages) {
  CommRecord r;
  for (const auto& m : messages) {
    const uint64_t n = m.bytes.size();
    switch (m.kind) {
      case MessageKind::kScale: r.scale_bytes += n; break;
      case MessageKind::kDenseValues: r.dense_grad_bytes += n; break;
      case MessageKind::kSparseIndices: r.sparse_index_bytes += n; break;
      case MessageKind::kSparseValues: r.sparse_value_bytes += n; break;
    }
  }
  return r;
}

uint64_t uncompressed_grad_bytes(const ModelConfig& config) {
  return 4 * (static_cast<uint64_t>(config.dense_param_count()) +
              static_cast<uint64_t>(config.embedding_param_count()));
}

CommRecord closed_form_bytes(const ModelConfig& config, const DpConfig& cfg,
                             std::span<const std::size_t> unique_rows) {
  const uint64_t vb = cfg.quantized() ? (cfg.grad_bits == 8 ? 1 : 2) : 4;
  const uint64_t scale = cfg.quantized() ? 4 : 0;
  const uint64_t d = config.embed_dim;
  CommRecord r;
  r.dense_grad_bytes = vb * config.dense_param_count();
  r.scale_bytes = scale * 2 * config.num_layers();
  for (std::size_t t = 0; t < config.table_rows.size(); ++t) {
    r.scale_bytes += scale;
    if (cfg.sparse_emb) {
      const uint64_t u = t < unique_rows.size() ? unique_rows[t] : 0;
      r.sparse_index_bytes += cfg.index_bytes * u;
      r.sparse_value_bytes += vb * u * d;
    } else {
      r.dense_grad_bytes += vb * config.table_rows[t] * d;
    }
  }
  return r;
}

std::vector<CommEstimate> comm_report(const ModelConfig& config,
                                      std::size_t local_batch,
                                      std::size_t index_bytes) {
  std::vector<std::size_t> unique(config.table_rows.size());
  for (std::size_t t = 0; t < unique.size(); ++t) {
    unique[t] = std::min(config.table_rows[t], local_batch);
  }
  std::vector<CommEstimate> out;
  auto row = [&](const char* name, int bits, bool sparse) {
    DpConfig cfg;
    cfg.grad_bits = bits;
    cfg.sparse_emb = sparse;
    cfg.index_bytes = index_bytes;
    cfg.validate();
    out.push_back({name, closed_form_bytes(config, cfg, unique)});
  };
  row("uncompressed", 32, false);
  row("sparse fp32", 32, true);
  row("sparse int16", 16, true);
  row("sparse int8", 8, true);
  return out;
}

}  // namespace dqrm
