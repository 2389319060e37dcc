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

#include "dqrm/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

constexpr char kMagic[4] = {'D', 'Q', 'R', 'M'};
constexpr std::size_t kChunk = std::size_t{1} << 20;  // even, see pack_int4

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void reserve(std::size_t n) { buf_.reserve(n); }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  std::span<const uint8_t> take(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated, "truncated model file");
    }
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    auto b = take(2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    auto b = take(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  uint64_t u64() {
    auto b = take(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::span<const uint8_t> data_;
  std::size_t pos_ = 0;
};

uint8_t encode_granularity(Granularity g) {
  return g == Granularity::kPerChannel ? 1 : 2;
}

Granularity decode_granularity(uint8_t v) {
  if (v == 1) return Granularity::kPerChannel;
  if (v == 2) return Granularity::kPerTensor;
  throw Error(ErrorCode::kConfig, "unknown MLP granularity code " + std::to_string(v));
}

void write_codes(ByteWriter& w, std::span<const int32_t> codes, int bits) {
  if (bits <= 4) {
    w.bytes(pack_int4(codes));
  } else if (bits == 8) {
    for (int32_t q : codes) w.u8(static_cast<uint8_t>(static_cast<int8_t>(q)));
  } else {
    for (int32_t q : codes) w.u16(static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
}

std::vector<int32_t> read_codes(ByteReader& r, std::size_t count, int bits) {
  if (bits <= 4) return unpack_int4(r.take(packed_payload_bytes(count, bits)), count);
  std::vector<int32_t> out(count);
  if (bits == 8) {
    for (auto& q : out) q = static_cast<int8_t>(r.u8());
  } else {
    for (auto& q : out) q = static_cast<int16_t>(r.u16());
  }
  return out;
}

void check_codes(std::span<const int32_t> codes, int qmax) {
  for (int32_t q : codes) {
    if (q < -qmax || q > qmax) {
      throw Error(ErrorCode::kCodeOutOfRange, "code out of range: " + std::to_string(q));
    }
  }
}

std::size_t header_bytes(const ModelConfig& c) {
  return 4 + 4 + 3 * 4 + 4 + 4 * c.bottom_arch.size() + 4 +
         4 * c.top_arch.size() + 4 + 4 + 8 * c.num_tables;
}

std::size_t layer_scale_count(const ModelConfig& c, std::size_t out) {
  if (c.mlp_bits == kFullPrecisionBits) return 0;
  return c.mlp_granularity == Granularity::kPerChannel ? out : 1;
}

}  // namespace

std::size_t packed_payload_bytes(std::size_t count, int bits) {
  switch (bits) {
    case 2:
    case 4: return (count + 1) / 2;
    case 8: return count;
    case 16: return 2 * count;
    case kFullPrecisionBits: return 4 * count;
    default:
      throw Error(ErrorCode::kInvalidArgument, "unsupported bit-width " + std::to_string(bits));
  }
}

ModelSizeBreakdown exported_model_size(const ModelConfig& config) {
  ModelSizeBreakdown s;
  s.header = header_bytes(config);
  for (std::size_t rows : config.table_rows) {
    s.table_scales += 4;
    s.table_payload += packed_payload_bytes(rows * config.embed_dim, config.emb_bits);
  }
  auto add_layer = [&](std::size_t in, std::size_t out) {
    s.mlp_scales += 4 * layer_scale_count(config, out);
    s.mlp_payload += packed_payload_bytes(in * out, config.mlp_bits);
    s.mlp_bias += 4 * out;
  };
  for (std::size_t i = 0; i + 1 < config.bottom_arch.size(); ++i) {
    add_layer(config.bottom_arch[i], config.bottom_arch[i + 1]);
  }
  std::size_t in = config.top_input();
  for (std::size_t w : config.top_arch) {
    add_layer(in, w);
    in = w;
  }
  return s;
}

std::vector<uint8_t> serialize_model(const Model<float>& model) {
  const ModelConfig& c = model.config();
  ByteWriter w;
  w.reserve(exported_model_size(c).total());
  for (char ch : kMagic) w.u8(static_cast<uint8_t>(ch));
  w.u32(kModelFormatVersion);
  w.u32(static_cast<uint32_t>(c.dense_in));
  w.u32(static_cast<uint32_t>(c.num_tables));
  w.u32(static_cast<uint32_t>(c.embed_dim));
  w.u32(static_cast<uint32_t>(c.bottom_arch.size()));
  for (std::size_t v : c.bottom_arch) w.u32(static_cast<uint32_t>(v));
  w.u32(static_cast<uint32_t>(c.top_arch.size()));
  for (std::size_t v : c.top_arch) w.u32(static_cast<uint32_t>(v));
  w.u8(static_cast<uint8_t>(c.emb_bits));
  w.u8(static_cast<uint8_t>(c.mlp_bits));
  w.u8(encode_granularity(c.mlp_granularity));
  w.u8(static_cast<uint8_t>(c.act_bits));
  w.u32(static_cast<uint32_t>(c.period));
  for (std::size_t r : c.table_rows) w.u64(r);

  for (const auto& table : model.tables()) {
    const auto weights = table.weights();
    const auto& spec = table.quant_spec();
    if (!spec) {
      w.f32(1.0f);
      for (float v : weights) w.f32(v);
      continue;
    }
    const Scale s = table.scale() ? *table.scale() : compute_scale<float>(weights, *spec);
    w.f32(s.value);
    for (std::size_t begin = 0; begin < weights.size(); begin += kChunk) {
      const auto part = weights.subspan(begin, std::min(kChunk, weights.size() - begin));
      write_codes(w, quantize<float>(part, s, *spec), spec->bits);
    }
  }

  for (std::size_t li = 0; li < model.num_layers(); ++li) {
    const auto& layer = model.layer(li);
    const auto& spec = layer.weight_quant();
    if (!spec) {
      for (float v : layer.weight()) w.f32(v);
    } else {
      std::vector<Scale> scales = layer.scales();
      if (scales.empty()) {
        scales = spec->granularity == Granularity::kPerChannel
                     ? per_channel_scales<float>(layer.weight(), layer.out(), layer.in(), *spec)
                     : std::vector<Scale>{compute_scale<float>(layer.weight(), *spec)};
      }
      for (const Scale& s : scales) w.f32(s.value);
      std::vector<int32_t> codes(layer.weight().size());
      const int qmax = spec->qmax();
      for (std::size_t o = 0; o < layer.out(); ++o) {
        const Scale s = scales.size() == 1 ? scales[0] : scales[o];
        for (std::size_t i = 0; i < layer.in(); ++i) {
          codes[o * layer.in() + i] = quantize_value(layer.weight()[o * layer.in() + i], s, qmax);
        }
      }
      write_codes(w, codes, spec->bits);
    }
    for (float b : layer.bias()) w.f32(b);
  }
  return w.take();
}

Model<float> deserialize_model(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "bad magic: not a DQRM model file");
  }
  const uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kBadVersion,
                "unsupported model format version " + std::to_string(version));
  }
  ModelConfig c;
  c.dense_in = r.u32();
  c.num_tables = r.u32();
  c.embed_dim = r.u32();
  c.bottom_arch.resize(r.u32());
  for (auto& v : c.bottom_arch) v = r.u32();
  c.top_arch.resize(r.u32());
  for (auto& v : c.top_arch) v = r.u32();
  c.emb_bits = r.u8();
  c.mlp_bits = r.u8();
  c.mlp_granularity = decode_granularity(r.u8());
  c.act_bits = r.u8();
  c.period = static_cast<int>(r.u32());
  if (c.num_tables > (1u << 20)) throw Error(ErrorCode::kConfig, "implausible table count");
  c.table_rows.resize(c.num_tables);
  for (auto& v : c.table_rows) v = r.u64();
  c.validate();
  // Reject before allocating tables a corrupt header could make enormous.
  const std::size_t expected = exported_model_size(c).total();
  if (bytes.size() < expected) throw Error(ErrorCode::kTruncated, "truncated model file");
  if (bytes.size() > expected) throw Error(ErrorCode::kTruncated, "trailing bytes after model payload");

  Model<float> model(c);
  for (auto& table : model.tables()) {
    const float s = r.f32();
    auto weights = table.mutable_weights();
    const auto& spec = table.quant_spec();
    if (!spec) {
      for (auto& v : weights) v = r.f32();
      continue;
    }
    const Scale scale{s};
    for (std::size_t begin = 0; begin < weights.size(); begin += kChunk) {
      const std::size_t n = std::min(kChunk, weights.size() - begin);
      const auto codes = read_codes(r, n, spec->bits);
      check_codes(codes, spec->qmax());
      for (std::size_t i = 0; i < n; ++i) weights[begin + i] = dequantize_value<float>(codes[i], scale);
    }
    table.set_scale(scale, 0);
  }

  for (std::size_t li = 0; li < model.num_layers(); ++li) {
    auto& layer = model.layer(li);
    const auto& spec = layer.weight_quant();
    auto weights = layer.mutable_weight();
    if (!spec) {
      for (auto& v : weights) v = r.f32();
    } else {
      std::vector<Scale> scales(layer.num_scales());
      for (auto& s : scales) s.value = r.f32();
      const auto codes = read_codes(r, weights.size(), spec->bits);
      check_codes(codes, spec->qmax());
      for (std::size_t o = 0; o < layer.out(); ++o) {
        const Scale s = scales.size() == 1 ? scales[0] : scales[o];
        for (std::size_t i = 0; i < layer.in(); ++i) {
          weights[o * layer.in() + i] = dequantize_value<float>(codes[o * layer.in() + i], s);
        }
      }
      layer.set_scales(std::move(scales), 0);
    }
    for (auto& b : layer.mutable_bias()) b = r.f32();
  }
  if (!r.at_end()) throw Error(ErrorCode::kTruncated, "trailing bytes after model payload");
  return model;
}

void export_model(const Model<float>& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

Model<float> import_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace dqrm
