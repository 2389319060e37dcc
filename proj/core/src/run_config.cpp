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

#include "dqrm/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw Error(ErrorCode::kConfig, "bad value '" + std::string(value) + "' for " +
                                      std::string(key) + ": " + std::string(why));
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_num(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "not a number");
  return out;
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_num<std::size_t>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) bad(key, v, "empty list");
  return out;
}

bool parse_switch(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  bad(key, v, "expected on/off");
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

void sync_tables(RunConfig& c) {
  c.model.num_tables = c.model.table_rows.size();
  c.synth.table_rows = c.model.table_rows;
}

}  // namespace

ModelConfig desk_model_config() {
  ModelConfig m;
  m.table_rows = {2000, 1000, 5000, 500, 200, 10000, 300, 50};
  m.num_tables = m.table_rows.size();
  m.embed_dim = 16;
  m.bottom_arch = {13, 64, 16};
  m.top_arch = {64, 1};
  return m;
}

RunConfig::RunConfig() : model(desk_model_config()) {
  synth.num_samples = 20000;
  sync_tables(*this);
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (key == "preset") {
    if (v == "kaggle") {
      model = kaggle_config();
    } else if (v == "desk") {
      model = desk_model_config();
    } else {
      bad(key, v, "expected kaggle or desk");
    }
  } else if (key == "table_rows") {
    model.table_rows = parse_list(key, v);
  } else if (key == "embed_dim") {
    model.embed_dim = parse_num<std::size_t>(key, v);
  } else if (key == "bottom_arch") {
    model.bottom_arch = parse_list(key, v);
    model.dense_in = model.bottom_arch.front();
  } else if (key == "top_arch") {
    model.top_arch = parse_list(key, v);
  } else if (key == "emb_bits") {
    model.emb_bits = parse_num<int>(key, v);
  } else if (key == "mlp_bits") {
    model.mlp_bits = parse_num<int>(key, v);
  } else if (key == "mlp_granularity") {
    try {
      model.mlp_granularity = parse_granularity(v);
    } catch (const Error&) {
      bad(key, v, "expected channel or matrix");
    }
  } else if (key == "act_bits") {
    model.act_bits = parse_num<int>(key, v);
  } else if (key == "period") {
    model.period = parse_num<int>(key, v);
  } else if (key == "lr") {
    model.lr = parse_num<double>(key, v);
  } else if (key == "pretrain_epochs") {
    model.pretrain_epochs = parse_num<int>(key, v);
  } else if (key == "nodes") {
    dp.nodes = parse_num<std::size_t>(key, v);
  } else if (key == "grad_bits") {
    dp.grad_bits = parse_num<int>(key, v);
  } else if (key == "ec") {
    dp.ec = parse_ec_mode(v);
  } else if (key == "sparse_emb") {
    dp.sparse_emb = parse_switch(key, v);
  } else if (key == "index_bytes") {
    dp.index_bytes = parse_num<std::size_t>(key, v);
  } else if (key == "dp_mode") {
    if (v == "real") {
      dp_mode = DpMode::kReal;
    } else if (v == "simulated") {
      dp_mode = DpMode::kSimulated;
    } else {
      bad(key, v, "expected real or simulated");
    }
  } else if (key == "synth_samples") {
    synth.num_samples = parse_num<std::size_t>(key, v);
  } else if (key == "synth_skew") {
    synth.skew = parse_num<double>(key, v);
  } else if (key == "synth_noise") {
    synth.label_noise = parse_num<double>(key, v);
  } else if (key == "synth_seed") {
    synth.seed = parse_num<uint64_t>(key, v);
  } else if (key == "train_data") {
    train_data = std::string(v);
  } else if (key == "test_data") {
    test_data = std::string(v);
  } else if (key == "max_records") {
    max_records = parse_num<std::size_t>(key, v);
  } else if (key == "test_fraction") {
    test_fraction = parse_num<double>(key, v);
  } else if (key == "batch_size") {
    batch_size = parse_num<std::size_t>(key, v);
  } else if (key == "epochs") {
    epochs = parse_num<int>(key, v);
  } else if (key == "eval_every") {
    eval_every = parse_num<int64_t>(key, v);
  } else if (key == "eval_train") {
    eval_train = parse_switch(key, v);
  } else if (key == "shuffle") {
    shuffle = parse_switch(key, v);
  } else if (key == "seed") {
    seed = parse_num<uint64_t>(key, v);
  } else if (key == "out_dir") {
    out_dir = std::string(v);
  } else {
    throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
  }
  sync_tables(*this);
}

void RunConfig::validate() const {
  model.validate();
  dp.validate();
  if (train_data.empty()) synth.validate();
  if (batch_size == 0) throw Error(ErrorCode::kConfig, "batch_size must be > 0");
  if (batch_size % dp.nodes != 0) {
    throw Error(ErrorCode::kConfig, "batch_size must be divisible by nodes");
  }
  if (epochs < 0 || model.pretrain_epochs < 0) {
    throw Error(ErrorCode::kConfig, "epoch counts must be >= 0");
  }
  if (eval_every < 0) throw Error(ErrorCode::kConfig, "eval_every must be >= 0");
  if (test_data.empty() && !(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kConfig, "test_fraction must lie in (0, 1)");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
  return {
      {"table_rows", fmt_list(model.table_rows)},
      {"embed_dim", std::to_string(model.embed_dim)},
      {"bottom_arch", fmt_list(model.bottom_arch)},
      {"top_arch", fmt_list(model.top_arch)},
      {"emb_bits", std::to_string(model.emb_bits)},
      {"mlp_bits", std::to_string(model.mlp_bits)},
      {"mlp_granularity", std::string(to_string(model.mlp_granularity))},
      {"act_bits", std::to_string(model.act_bits)},
      {"period", std::to_string(model.period)},
      {"lr", fmt(model.lr)},
      {"pretrain_epochs", std::to_string(model.pretrain_epochs)},
      {"nodes", std::to_string(dp.nodes)},
      {"grad_bits", std::to_string(dp.grad_bits)},
      {"ec", std::string(to_string(dp.ec))},
      {"sparse_emb", dp.sparse_emb ? "on" : "off"},
      {"index_bytes", std::to_string(dp.index_bytes)},
      {"dp_mode", dp_mode == DpMode::kReal ? "real" : "simulated"},
      {"synth_samples", std::to_string(synth.num_samples)},
      {"synth_skew", fmt(synth.skew)},
      {"synth_noise", fmt(synth.label_noise)},
      {"synth_seed", std::to_string(synth.seed)},
      {"train_data", train_data},
      {"test_data", test_data},
      {"max_records", std::to_string(max_records)},
      {"test_fraction", fmt(test_fraction)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"eval_every", std::to_string(eval_every)},
      {"eval_train", eval_train ? "on" : "off"},
      {"shuffle", shuffle ? "on" : "off"},
      {"seed", std::to_string(seed)},
      {"out_dir", out_dir},
  };
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_no) +
                                          ": expected key = value");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig config;
  apply_config_text(config, ss.str());
  return config;
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, "override '" + o + "' is not key=value");
    }
    config.set(trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.to_pairs()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace dqrm
