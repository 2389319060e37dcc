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

#include "dqrm/trainer.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

#include "dqrm/criteo.hpp"
#include "dqrm/dp_trainer.hpp"
#include "dqrm/error.hpp"
#include "dqrm/model_io.hpp"
#include "dqrm/rng.hpp"
#include "dqrm/run_log.hpp"
#include "dqrm/simulated_dp.hpp"
#include "dqrm/synthetic.hpp"

namespace dqrm {

namespace {

void split_tail(std::vector<Example>& all, double fraction, Dataset& out) {
  const auto n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(all.size()) * fraction));
  const std::size_t n_train = all.size() - std::min(n_test, all.size());
  out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  all.resize(n_train);
  out.train = std::move(all);
}

// Eval needs frozen scales; a tensor that never ran a training step has none.
void ensure_scales(Model<float>& model, int64_t iter) {
  if (!model.quantization_enabled()) return;
  for (auto& t : model.tables()) {
    if (t.quantization_active() && !t.scale()) t.maybe_update_scale(iter);
  }
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    auto& l = model.layer(i);
    if (l.quantization_active() && l.scales().empty()) l.maybe_update_scales(iter);
  }
}

// Tensors whose scale was refreshed at `iter`, and the bytes of those scales.
std::pair<int64_t, int64_t> scale_events(const Model<float>& model, int64_t iter) {
  int64_t tensors = 0;
  int64_t bytes = 0;
  for (const auto& t : model.tables()) {
    if (t.quantization_active() && t.scale_iter() == iter) {
      ++tensors;
      bytes += 4;
    }
  }
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    const auto& l = model.layer(i);
    if (l.quantization_active() && l.scale_iter() == iter) {
      ++tensors;
      bytes += 4 * static_cast<int64_t>(l.num_scales());
    }
  }
  return {tensors, bytes};
}

LogValue opt(const std::optional<double>& v) {
  if (v) return *v;
  return std::monostate{};
}

}  // namespace

Dataset load_dataset(const RunConfig& config) {
  Dataset out;
  const auto& rows = config.model.table_rows;
  std::vector<Example> all;
  if (!config.train_data.empty()) {
    all = read_criteo_file(config.train_data, rows, config.max_records);
  } else {
    const std::vector<RawRecord> raw = generate_synthetic(config.synth);
    all.reserve(raw.size());
    for (const auto& r : raw) all.push_back(to_example(r, rows));
  }
  if (!config.test_data.empty()) {
    out.train = std::move(all);
    out.test = read_criteo_file(config.test_data, rows, config.max_records);
  } else {
    split_tail(all, config.test_fraction, out);
  }
  return out;
}

EvalResult evaluate(const Model<float>& model, std::span<const Example> examples,
                    std::size_t batch_size) {
  EvalResult r;
  r.examples = examples.size();
  if (examples.empty()) return r;
  EvalAccumulator acc;
  for (const Batch& b : make_batches(examples, batch_size, false)) {
    const std::vector<float> logits = model.predict(b);
    std::vector<double> scores(logits.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      scores[i] = sigmoid<double>(static_cast<double>(logits[i]));
      loss += bce(scores[i], b.labels[i]);
    }
    acc.add(scores, b.labels);
    acc.add_loss(loss, logits.size());
  }
  r.loss = acc.mean_loss();
  r.accuracy = acc.accuracy();
  try {
    r.auc = acc.auc();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedAuc) throw;
  }
  return r;
}

TrainSummary run_training(const RunConfig& config) {
  config.validate();
  return run_training(config, load_dataset(config));
}

TrainSummary run_training(const RunConfig& config, const Dataset& data) {
  config.validate();
  if (data.train.empty()) throw Error(ErrorCode::kConfig, "no training examples");
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);

  TrainSummary summary;
  summary.log_path = out_dir / "metrics.jsonl";
  summary.model_path = out_dir / "model.dqrm";
  std::ofstream log_file(summary.log_path, std::ios::binary | std::ios::trunc);
  if (!log_file) throw Error(ErrorCode::kIo, "cannot write " + summary.log_path.string());
  RunLog log(log_file);
  log.header(config.to_pairs());

  Model<float> init(config.model);
  init.init(config.seed);
  const std::size_t nodes = config.dp.nodes;
  const bool simulated = config.dp_mode == DpMode::kSimulated;
  std::unique_ptr<DataParallelTrainer> real;
  std::unique_ptr<Model<float>> sim_model;
  std::unique_ptr<SimulatedDpTrainer> sim;
  if (simulated) {
    sim_model = std::make_unique<Model<float>>(init);
    sim = std::make_unique<SimulatedDpTrainer>(*sim_model, config.dp);
  } else {
    real = std::make_unique<DataParallelTrainer>(init, config.dp);
  }
  auto model = [&]() -> Model<float>& { return simulated ? *sim_model : real->replica(0); };
  auto set_quant = [&](bool on) {
    if (simulated) {
      sim_model->set_quantization_enabled(on);
    } else {
      real->set_quantization_enabled(on);
    }
  };
  auto prepare_eval = [&](int64_t iter) {
    if (simulated) {
      ensure_scales(*sim_model, iter);
    } else {
      for (std::size_t n = 0; n < nodes; ++n) ensure_scales(real->replica(n), iter);
    }
  };

  const int pretrain = config.model.pretrain_epochs;
  if (pretrain > 0) set_quant(false);

  std::vector<Example> order = data.train;
  Rng shuffle_rng(splitmix64(config.seed ^ 0x243f6a8885a308d3ULL));
  int64_t iter = 0;
  const int total_epochs = pretrain + config.epochs;
  double epoch_loss_sum = 0.0;
  int64_t epoch_steps = 0;

  auto after_step = [&](double loss, int epoch, const CommRecord* comm) {
    log.log(RecordKind::kTrain, {{"iter", iter}, {"epoch", int64_t{epoch}}, {"train_loss", loss}});
    if (comm != nullptr) {
      log.log(RecordKind::kComm, {{"iter", iter},
                                  {"dense_grad_bytes", static_cast<int64_t>(comm->dense_grad_bytes)},
                                  {"sparse_index_bytes", static_cast<int64_t>(comm->sparse_index_bytes)},
                                  {"sparse_value_bytes", static_cast<int64_t>(comm->sparse_value_bytes)},
                                  {"scale_bytes", static_cast<int64_t>(comm->scale_bytes)},
                                  {"total_bytes", static_cast<int64_t>(comm->total())}});
    }
    const auto [tensors, bytes] = scale_events(model(), iter);
    if (tensors > 0) {
      log.log(RecordKind::kScaleUpdate, {{"iter", iter}, {"tensors", tensors}, {"scale_bytes", bytes}});
    }
    epoch_loss_sum += loss;
    ++epoch_steps;
    ++iter;
  };
  auto run_eval = [&](int epoch) {
    prepare_eval(iter);
    auto emit = [&](const char* split, const EvalResult& r) {
      log.log(RecordKind::kEval, {{"iter", iter},
                                  {"epoch", int64_t{epoch}},
                                  {"split", std::string(split)},
                                  {"loss", r.loss},
                                  {"acc", r.accuracy},
                                  {"auc", opt(r.auc)}});
    };
    if (config.eval_train) {
      summary.train = evaluate(model(), data.train);
      emit("train", summary.train);
    }
    if (!data.test.empty()) {
      summary.test = evaluate(model(), data.test);
      emit("test", summary.test);
    }
  };

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    if (pretrain > 0 && epoch == pretrain) set_quant(true);
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
      }
    }
    const std::size_t usable =
        nodes > 1 ? order.size() / config.batch_size * config.batch_size : order.size();
    const std::span<const Example> stream(order.data(), usable);
    epoch_loss_sum = 0.0;
    epoch_steps = 0;

    if (simulated) {
      double group_loss = 0.0;
      std::size_t group_n = 0;
      for (const Batch& mb : make_batches(stream, config.batch_size / nodes, false)) {
        const SimStepResult r = sim->step(mb);
        group_loss += r.loss;
        ++group_n;
        if (r.updated) {
          after_step(group_loss / static_cast<double>(group_n), epoch, nullptr);
          group_loss = 0.0;
          group_n = 0;
          if (config.eval_every > 0 && iter % config.eval_every == 0) run_eval(epoch);
        }
      }
      if (sim->flush()) after_step(group_loss / static_cast<double>(group_n), epoch, nullptr);
    } else {
      for (const Batch& b : make_batches(stream, config.batch_size, false)) {
        const DpStepResult r = real->step(b, iter);
        after_step(r.loss, epoch, &r.comm);
        if (config.eval_every > 0 && iter % config.eval_every == 0) run_eval(epoch);
      }
    }
    if (config.eval_every == 0 || iter % config.eval_every != 0) run_eval(epoch);
    if (epoch_steps > 0) summary.final_train_loss = epoch_loss_sum / static_cast<double>(epoch_steps);
  }
  if (total_epochs == 0) run_eval(0);

  summary.iterations = iter;
  summary.checksum = model().checksum();
  export_model(model(), summary.model_path);
  const auto size = std::filesystem::file_size(summary.model_path);
  log.log(RecordKind::kSummary, {{"iter", iter},
                                 {"train_loss", summary.final_train_loss},
                                 {"train_acc", config.eval_train ? LogValue(summary.train.accuracy) : LogValue()},
                                 {"test_acc", summary.test.accuracy},
                                 {"test_auc", opt(summary.test.auc)},
                                 {"model_bytes", static_cast<int64_t>(size)},
                                 {"checksum", std::to_string(summary.checksum)}});
  log_file.flush();
  if (!log_file) throw Error(ErrorCode::kIo, "failed writing " + summary.log_path.string());
  return summary;
}

}  // namespace dqrm
