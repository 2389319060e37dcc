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

// Command-line front end: train, eval, export, inspect, synth, comm-report.
//
// Exit status: 0 success, 2 configuration error, 3 data error, 4 divergence,
// 1 anything else. DQRM_LOG_LEVEL (quiet, info, debug) sets stderr chatter.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "dqrm/comm_accounting.hpp"
#include "dqrm/criteo.hpp"
#include "dqrm/error.hpp"
#include "dqrm/histogram.hpp"
#include "dqrm/model_io.hpp"
#include "dqrm/run_config.hpp"
#include "dqrm/run_log.hpp"
#include "dqrm/synthetic.hpp"
#include "dqrm/trainer.hpp"

namespace {

enum class Verbosity { kQuiet, kInfo, kDebug };

Verbosity verbosity() {
  const char* v = std::getenv("DQRM_LOG_LEVEL");
  if (v == nullptr) return Verbosity::kInfo;
  const std::string s(v);
  if (s == "quiet" || s == "0") return Verbosity::kQuiet;
  if (s == "debug" || s == "2") return Verbosity::kDebug;
  return Verbosity::kInfo;
}

void info(const std::string& msg) {
  if (verbosity() != Verbosity::kQuiet) std::cerr << "dqrm: " << msg << '\n';
}

int exit_code(dqrm::ErrorCode code) {
  using dqrm::ErrorCode;
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kMalformedRecord:
    case ErrorCode::kIo:
    case ErrorCode::kBadMagic:
    case ErrorCode::kBadVersion:
    case ErrorCode::kTruncated:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kCodeOutOfRange:
      return 3;
    case ErrorCode::kDiverged:
    case ErrorCode::kNonFinite:
      return 4;
    default:
      return 1;
  }
}

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> flag_overrides;

  dqrm::RunConfig resolve() const {
    dqrm::RunConfig cfg = config_path.empty() ? dqrm::RunConfig() : dqrm::load_run_config(config_path);
    dqrm::apply_overrides(cfg, flag_overrides);
    dqrm::apply_overrides(cfg, sets);
    return cfg;
  }
};

// Registers --config, --set and one flag per common ablation axis.
void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "key = value config file");
  cmd->add_option("--set", args.sets, "override, key=value (repeatable)");
  struct Axis {
    const char* flag;
    const char* key;
  };
  static constexpr Axis kAxes[] = {
      {"--nodes", "nodes"},
      {"--emb-bits", "emb_bits"},
      {"--mlp-bits", "mlp_bits"},
      {"--act-bits", "act_bits"},
      {"--grad-bits", "grad_bits"},
      {"--ec", "ec"},
      {"--sparse-emb", "sparse_emb"},
      {"--period", "period"},
      {"--granularity", "mlp_granularity"},
      {"--pretrain-epochs", "pretrain_epochs"},
      {"--epochs", "epochs"},
      {"--batch-size", "batch_size"},
      {"--lr", "lr"},
      {"--seed", "seed"},
      {"--dp-mode", "dp_mode"},
      {"--train-data", "train_data"},
      {"--test-data", "test_data"},
      {"--out", "out_dir"},
      {"--preset", "preset"},
  };
  for (const Axis& a : kAxes) {
    const std::string key = a.key;
    cmd->add_option_function<std::string>(
        a.flag, [&args, key](const std::string& v) { args.flag_overrides.push_back(key + "=" + v); },
        "sets " + key);
  }
}

std::string fmt_auc(const std::optional<double>& auc) {
  if (!auc) return "undefined";
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << *auc;
  return s.str();
}

int cmd_train(const ConfigArgs& args) {
  const dqrm::RunConfig cfg = args.resolve();
  info("training, " + std::to_string(cfg.dp.nodes) + " node(s), results in " + cfg.out_dir);
  const dqrm::TrainSummary s = dqrm::run_training(cfg);
  std::cout << std::fixed << std::setprecision(6) << "iterations " << s.iterations
            << "\ntrain_loss " << s.final_train_loss << "\ntest_acc " << s.test.accuracy
            << "\ntest_auc " << fmt_auc(s.test.auc) << "\nmodel " << s.model_path.string()
            << "\nlog " << s.log_path.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const ConfigArgs& args, const std::string& log_path) {
  const dqrm::Model<float> model = dqrm::import_model(model_path);
  std::vector<dqrm::Example> examples;
  if (!data_path.empty()) {
    examples = dqrm::read_criteo_file(data_path, model.config().table_rows);
  } else {
    dqrm::RunConfig cfg = args.resolve();
    cfg.model.table_rows = model.config().table_rows;
    cfg.synth.table_rows = cfg.model.table_rows;
    examples = dqrm::load_dataset(cfg).test;
  }
  const dqrm::EvalResult r = dqrm::evaluate(model, examples);
  std::cout << std::fixed << std::setprecision(6) << "examples " << r.examples << "\nloss "
            << r.loss << "\naccuracy " << r.accuracy << "\nauc " << fmt_auc(r.auc) << '\n';
  if (!log_path.empty()) {
    std::ofstream out(log_path, std::ios::app);
    if (!out) throw dqrm::Error(dqrm::ErrorCode::kIo, "cannot write " + log_path);
    dqrm::RunLog log(out);
    dqrm::LogValue auc = std::monostate{};
    if (r.auc) auc = *r.auc;
    log.log(dqrm::RecordKind::kEval, {{"split", std::string("eval")},
                                      {"examples", static_cast<int64_t>(r.examples)},
                                      {"loss", r.loss},
                                      {"acc", r.accuracy},
                                      {"auc", auc}});
  }
  return 0;
}

int cmd_export(const std::string& model_path, const std::string& out_path) {
  const dqrm::Model<float> model = dqrm::import_model(model_path);
  dqrm::export_model(model, out_path);
  info("wrote " + out_path);
  return 0;
}

int cmd_inspect(const std::string& model_path, int table, std::size_t bins,
                const std::string& out_path) {
  const dqrm::Model<float> model = dqrm::import_model(model_path);
  const auto& c = model.config();
  const dqrm::ModelSizeBreakdown size = dqrm::exported_model_size(c);
  std::cout << "tables " << c.num_tables << "\nembed_dim " << c.embed_dim << "\nemb_bits "
            << c.emb_bits << "\nmlp_bits " << c.mlp_bits << "\nmlp_granularity "
            << dqrm::to_string(c.mlp_granularity) << "\nembedding_params "
            << c.embedding_param_count() << "\nmlp_params " << c.dense_param_count()
            << "\nfile_bytes " << size.total() << "\nembedding_bytes " << size.embedding_bytes()
            << '\n';
  if (table < 0) return 0;
  if (static_cast<std::size_t>(table) >= c.num_tables) {
    throw dqrm::Error(dqrm::ErrorCode::kInvalidArgument, "no table " + std::to_string(table));
  }
  const auto& t = model.tables()[static_cast<std::size_t>(table)];
  double m = 0.0;
  for (float v : t.weights()) m = std::max(m, static_cast<double>(std::fabs(v)));
  if (m == 0.0) m = 1.0;
  const dqrm::TableHistograms h = dqrm::table_histograms(t, bins, -m, m);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw dqrm::Error(dqrm::ErrorCode::kIo, "cannot write " + out_path);
    out = &file;
  }
  *out << "# table " << table << " master\n";
  dqrm::write_histogram(*out, h.master);
  *out << "# table " << table << " quantized\n";
  dqrm::write_histogram(*out, h.quantized);
  return 0;
}

int cmd_synth(const ConfigArgs& args, const std::string& out_path) {
  const dqrm::RunConfig cfg = args.resolve();
  const std::vector<dqrm::RawRecord> records = dqrm::generate_synthetic(cfg.synth);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw dqrm::Error(dqrm::ErrorCode::kIo, "cannot write " + out_path);
  dqrm::write_criteo_tsv(out, records);
  if (!out.flush()) throw dqrm::Error(dqrm::ErrorCode::kIo, "failed writing " + out_path);
  info("wrote " + std::to_string(records.size()) + " records to " + out_path);
  return 0;
}

int cmd_comm_report(const ConfigArgs& args, std::size_t local_batch) {
  const dqrm::RunConfig cfg = args.resolve();
  const std::size_t batch = local_batch > 0 ? local_batch : cfg.batch_size / cfg.dp.nodes;
  const auto rows = dqrm::comm_report(cfg.model, batch, cfg.dp.index_bytes);
  std::cout << "# per node per iteration, local batch " << batch << ", index bytes "
            << cfg.dp.index_bytes << '\n';
  std::cout << std::left << std::setw(14) << "setting" << std::right << std::setw(16) << "dense"
            << std::setw(14) << "index" << std::setw(14) << "values" << std::setw(10) << "scales"
            << std::setw(16) << "total" << std::setw(14) << "MB" << '\n';
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(14) << r.setting << std::right << std::setw(16)
              << r.bytes.dense_grad_bytes << std::setw(14) << r.bytes.sparse_index_bytes
              << std::setw(14) << r.bytes.sparse_value_bytes << std::setw(10) << r.bytes.scale_bytes
              << std::setw(16) << r.bytes.total() << std::setw(14) << std::fixed
              << std::setprecision(3) << static_cast<double>(r.bytes.total()) / 1e6 << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized recommendation model training and tooling"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "train a model, write metrics log and export");
  add_config_options(train, train_args);

  ConfigArgs eval_args;
  std::string eval_model, eval_data, eval_log;
  auto* eval = app.add_subcommand("eval", "accuracy and ROC AUC of an exported model");
  eval->add_option("-m,--model", eval_model, "exported model")->required();
  eval->add_option("-d,--data", eval_data, "Criteo TSV (default: synthetic test split)");
  eval->add_option("--log", eval_log, "append an eval record to this metrics log");
  add_config_options(eval, eval_args);

  std::string export_model, export_out;
  auto* exp = app.add_subcommand("export", "re-encode an exported model");
  exp->add_option("-m,--model", export_model, "exported model")->required();
  exp->add_option("-o,--output", export_out, "output path")->required();

  std::string inspect_model, inspect_out;
  int inspect_table = -1;
  std::size_t inspect_bins = 50;
  auto* inspect = app.add_subcommand("inspect", "model summary and weight histograms");
  inspect->add_option("-m,--model", inspect_model, "exported model")->required();
  inspect->add_option("--histogram", inspect_table, "table id to histogram");
  inspect->add_option("--bins", inspect_bins, "histogram bins")->check(CLI::PositiveNumber);
  inspect->add_option("-o,--output", inspect_out, "histogram file (default stdout)");

  ConfigArgs synth_args;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset in Criteo layout");
  add_config_options(synth, synth_args);
  synth->add_option("-o,--output", synth_out, "TSV path")->required();

  ConfigArgs comm_args;
  std::size_t comm_batch = 0;
  auto* comm = app.add_subcommand("comm-report", "closed-form gradient bytes per iteration");
  add_config_options(comm, comm_args);
  comm->add_option("--local-batch", comm_batch, "samples per node (default batch_size/nodes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_model, eval_data, eval_args, eval_log);
    if (*exp) return cmd_export(export_model, export_out);
    if (*inspect) return cmd_inspect(inspect_model, inspect_table, inspect_bins, inspect_out);
    if (*synth) return cmd_synth(synth_args, synth_out);
    if (*comm) return cmd_comm_report(comm_args, comm_batch);
  } catch (const dqrm::Error& e) {
    std::cerr << "dqrm: error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "dqrm: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
