// logxai: operator entry points for data generation, training, evaluation,
// offline analysis and the HTTP service.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 model error, 4 I/O error.

#include "logxai/encoder/checkpoint.hpp"
#include "logxai/encoder/train.hpp"
#include "logxai/encoder/vocab.hpp"
#include "logxai/logcore.hpp"
#include "logxai/metrics.hpp"
#include "logxai/pipeline.hpp"
#include "logxai/service/config.hpp"
#include "logxai/service/http.hpp"
#include "logxai/service/service.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace logxai;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::usage: return 1;
  case ErrorKind::data: return 2;
  case ErrorKind::model: return 3;
  case ErrorKind::io: return 4;
  }
  return 1;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " '" + path + "' does not exist");
}

struct GenDataArgs {
  std::size_t n_normal = 1000;
  std::size_t n_anomaly = 1000;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  const auto corpus = generate_synthetic_corpus(a.n_normal, a.n_anomaly, a.seed);
  write_labeled_tsv(corpus, a.out);
  std::cout << "wrote " << corpus.size() << " records to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string test_out;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 42;
  std::vector<std::size_t> sizes{4000, 500, 500};
  encoder::TrainOptions opt;
  encoder::EncoderConfig config;
};

int cmd_train(TrainArgs a) {
  require_file(a.data, "data file");
  if (a.sizes.size() != 3) throw ArgumentError("--sizes takes train,val,test");
  const auto records = parse_dataset(a.data, DatasetFormat::labeled_tsv);
  const auto split = split_dataset(records, {a.sizes[0], a.sizes[1], a.sizes[2]}, a.split_seed);
  a.config.seed = a.seed;
  a.config.validate();
  const auto vocab = encoder::build_vocab(split.train, a.config);
  const auto result = encoder::train(split, vocab, a.config, a.opt,
                                     [](std::size_t epoch, double loss, double acc) {
                                       std::cerr << "epoch " << epoch << ": train loss " << loss
                                                 << ", val accuracy " << acc << "\n";
                                     });
  encoder::save_checkpoint({vocab, result.params}, a.out);
  if (!a.test_out.empty()) write_labeled_tsv(split.test, a.test_out);
  std::cout << nlohmann::json(result.report).dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string model_name = "logxai-encoder";
  std::string json_out;
};

int cmd_eval(const EvalArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.data, "data file");
  const auto model = encoder::load_checkpoint(a.checkpoint);
  const auto records = parse_dataset(a.data, DatasetFormat::labeled_tsv);
  const auto report = evaluate_model(records, model);
  if (!a.json_out.empty()) write_text(a.json_out, nlohmann::json(report).dump(2) + "\n");
  char line[64];
  std::snprintf(line, sizeof line, "accuracy: %.4f\n", report.accuracy);
  std::cout << metrics::format_table(a.model_name, report) << "\n" << line;
  return 0;
}

struct AnalyzeArgs {
  std::string logfile;
  std::string checkpoint;
  std::string out_dir;
  std::size_t ig_steps = 128;
  std::string catalog;
};

int cmd_analyze(const AnalyzeArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.logfile, "log file");
  const auto model = encoder::load_checkpoint(a.checkpoint);
  const auto catalog = a.catalog.empty() ? reportgen::default_catalog() : reportgen::load_catalog(a.catalog);
  const auto records = parse_dataset(a.logfile, DatasetFormat::raw_lines);
  PipelineOptions opt;
  opt.ig_steps = a.ig_steps;

  std::vector<LineAnalysis> analyses;
  analyses.reserve(records.size());
  for (const auto& r : records) analyses.push_back(analyze_line(r, model, catalog, opt));

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create '" + a.out_dir + "': " + ec.message());
  nlohmann::json rows = nlohmann::json::array();
  std::size_t anomalies = 0;
  for (const auto& an : analyses) {
    const std::string stem = "line_" + std::to_string(an.record.line_no);
    write_text(fs::path(a.out_dir) / (stem + ".json"), line_analysis_json(an).dump() + "\n");
    write_text(fs::path(a.out_dir) / (stem + ".report.txt"), an.report.text);
    anomalies += an.prediction.label == Label::anomaly ? 1 : 0;
    rows.push_back({{"line_no", an.record.line_no},
                    {"verdict", std::string(to_string(an.response.verdict))},
                    {"confidence", an.response.confidence},
                    {"severity", std::string(reportgen::to_string(an.response.severity))}});
  }
  write_text(fs::path(a.out_dir) / "results.json",
             nlohmann::json{{"line_count", analyses.size()},
                            {"anomaly_count", anomalies},
                            {"results", rows}}
                     .dump(2) +
                 "\n");
  std::cout << analyses.size() << " lines analyzed, " << anomalies << " anomalous; output in "
            << a.out_dir << "\n";
  return 0;
}

struct ServeArgs {
  std::string config;
  std::optional<int> port;
  std::optional<std::string> store;
  std::optional<std::string> checkpoint;
};

int cmd_serve(const ServeArgs& a) {
  auto cfg = service::load_service_config(a.config);
  if (a.port) cfg.port = *a.port;
  if (a.store) cfg.store_path = *a.store;
  if (a.checkpoint) cfg.checkpoint_path = *a.checkpoint;

  std::optional<encoder::Checkpoint> model;
  if (!cfg.checkpoint_path.empty() && fs::is_regular_file(cfg.checkpoint_path))
    model = encoder::load_checkpoint(cfg.checkpoint_path);
  else
    std::cerr << "warning: no model checkpoint at '" << cfg.checkpoint_path
              << "'; analyze requests will return 503\n";
  auto catalog = cfg.catalog_path.empty() ? reportgen::default_catalog()
                                          : reportgen::load_catalog(cfg.catalog_path);
  auto questions = cfg.questionnaire_path.empty() ? service::default_questionnaire()
                                                  : service::load_questionnaire(cfg.questionnaire_path);
  auto store = std::make_shared<service::FileStore>(cfg.store_path);
  service::Service svc(cfg, store, std::move(model), std::move(catalog), std::move(questions));
  service::HttpServer server(svc);
  const int port = server.bind(cfg.host, cfg.port);
  std::cout << "listening on http://" << cfg.host << ":" << port << std::endl;
  server.run();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable log anomaly detection"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic labeled_tsv corpus");
  gen_cmd->add_option("--normal", gen.n_normal, "Number of normal lines")->capture_default_str();
  gen_cmd->add_option("--anomaly", gen.n_anomaly, "Number of anomalous lines")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output labeled_tsv path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the encoder and write a checkpoint");
  train_cmd->add_option("--data", tr.data, "labeled_tsv corpus")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", tr.seed, "Model seed (init, shuffling, dropout)")->capture_default_str();
  train_cmd->add_option("--split-seed", tr.split_seed, "Dataset split seed")->capture_default_str();
  train_cmd->add_option("--sizes", tr.sizes, "train,val,test sizes")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.opt.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--lr", tr.opt.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch", tr.opt.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--layers", tr.config.num_layers, "Encoder layers")->capture_default_str();
  train_cmd->add_option("--heads", tr.config.num_heads, "Attention heads per layer")->capture_default_str();
  train_cmd->add_option("--d-model", tr.config.d_model, "Model width")->capture_default_str();
  train_cmd->add_option("--d-ff", tr.config.d_ff, "Feed-forward width")->capture_default_str();
  train_cmd->add_option("--max-seq-len", tr.config.max_seq_len, "Maximum tokens per line")->capture_default_str();
  train_cmd->add_option("--dropout", tr.config.dropout, "Dropout rate")->capture_default_str();
  train_cmd->add_option("--test-out", tr.test_out, "Also write the held-out test split here");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on labeled data");
  eval_cmd->add_option("--data", ev.data, "labeled_tsv data")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--model-name", ev.model_name, "Row label in the table")->capture_default_str();
  eval_cmd->add_option("--json-out", ev.json_out, "Also write the metrics report as JSON");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Explain every line of a raw log file");
  analyze_cmd->add_option("--logfile", an.logfile, "raw_lines log file")->required();
  analyze_cmd->add_option("--checkpoint", an.checkpoint, "Checkpoint path")->required();
  analyze_cmd->add_option("--out-dir", an.out_dir, "Output directory")->required();
  analyze_cmd->add_option("--ig-steps", an.ig_steps, "Integrated-gradients steps")->capture_default_str();
  analyze_cmd->add_option("--catalog", an.catalog, "Cause/action catalog JSON");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", sv.config, "Service config JSON");
  serve_cmd->add_option("--port", sv.port, "Listen port (overrides config)");
  serve_cmd->add_option("--store", sv.store, "Store directory (overrides config)");
  serve_cmd->add_option("--checkpoint", sv.checkpoint, "Checkpoint path (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_eval(ev);
    if (*analyze_cmd) return cmd_analyze(an);
    if (*serve_cmd) return cmd_serve(sv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
