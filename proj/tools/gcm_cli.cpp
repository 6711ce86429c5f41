#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gcm/error.hpp"
#include "gcm/runner.hpp"

namespace fs = std::filesystem;
using namespace gcm;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string checkpoint;
  std::string input;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config) {
  auto* c = cmd->add_option("--config", o.config, "JSON config file");
  if (needs_config) c->required();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--threads", o.threads, "override the config thread count");
  cmd->add_option("--out", o.out, "output directory (default: config out_dir)");
}

ModelConfig resolve_config(const Options& o, ModelConfig cfg) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

ModelConfig config_from_file(const Options& o) { return resolve_config(o, load_config(o.config)); }

void note(const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); }

int cmd_train(const Options& o) {
  const ModelConfig cfg = config_from_file(o);
  const Corpus corpus = load_corpus(cfg);
  const RunOutcome run = train_and_evaluate(cfg, corpus, [](const EpochLog& e) {
    note("epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss) + " dev " +
         std::to_string(e.dev_metric));
  });
  const fs::path out = cfg.out_dir;
  write_text_file(out / "metrics.csv", metrics_csv(cfg, run.result.log));
  save_checkpoint(out / "model.ckpt", cfg, corpus.scheme, run.result.best);
  write_text_file(out / "report.json", report_json(cfg, run));
  std::printf("best_epoch=%zu dev_%s=%.6f", run.result.best_epoch, to_string(cfg.metric).c_str(),
              run.dev.value);
  if (!run.test.metric.empty()) std::printf(" test_%s=%.6f", to_string(cfg.metric).c_str(), run.test.value);
  std::printf("\n");
  return 0;
}

struct Loaded {
  Checkpoint ckpt;
  EmbeddingTable table;
};

Loaded load_for_inference(const Options& o) {
  Checkpoint ckpt = load_checkpoint(o.checkpoint);
  if (o.seed) ckpt.config.seed = *o.seed;
  if (o.threads) ckpt.config.threads = *o.threads;
  if (!o.out.empty()) ckpt.config.out_dir = o.out;
  EmbeddingTable table = load_embedding_table(ckpt.config);
  if (table.dim() != ckpt.model.arch().input_dim)
    throw ConfigError("embedding width " + std::to_string(table.dim()) + " does not match checkpoint input_dim " +
                      std::to_string(ckpt.model.arch().input_dim));
  return {std::move(ckpt), std::move(table)};
}

std::vector<Sentence> eval_sentences(const Options& o, const Checkpoint& ckpt) {
  if (o.input.empty()) return default_eval_split(ckpt.config, ckpt.scheme);
  return read_conll(o.input, ckpt.scheme, ckpt.config.conll_options());
}

int cmd_eval(const Options& o) {
  const Loaded l = load_for_inference(o);
  const ModelConfig& cfg = l.ckpt.config;
  const auto sentences = eval_sentences(o, l.ckpt);
  if (sentences.empty()) throw UsageError("no sentences to evaluate");
  const auto report =
      evaluate(l.ckpt.model, make_examples(sentences, l.table), l.ckpt.scheme, cfg.metric, cfg.threads);
  write_text_file(fs::path(cfg.out_dir) / "eval.json", eval_json(cfg, report));
  std::printf("%s=%.6f sentences=%zu\n", report.metric.c_str(), report.value, sentences.size());
  return 0;
}

int cmd_predict(const Options& o) {
  if (o.input.empty()) throw UsageError("predict needs --input");
  const Loaded l = load_for_inference(o);
  const ModelConfig& cfg = l.ckpt.config;
  auto sentences = read_tokens(o.input, cfg.conll_options());
  if (sentences.empty()) throw UsageError("no sentences in " + o.input);
  const auto tags = predict_all(l.ckpt.model, make_examples(sentences, l.table), cfg.threads);
  for (std::size_t s = 0; s < sentences.size(); ++s) sentences[s].tags = tags[s];
  const fs::path path = fs::path(cfg.out_dir) / "predictions.conll";
  fs::create_directories(path.parent_path());
  write_conll(path, sentences, l.ckpt.scheme);
  std::printf("wrote %zu sentences to %s\n", sentences.size(), path.string().c_str());
  return 0;
}

int cmd_export_gates(const Options& o) {
  const Loaded l = load_for_inference(o);
  const ModelConfig& cfg = l.ckpt.config;
  if (!is_gated(l.ckpt.model.arch().head))
    throw UsageError("checkpoint head " + to_string(l.ckpt.model.arch().head) + " has no gates to export");
  const auto sentences = o.input.empty() ? default_eval_split(cfg, l.ckpt.scheme)
                                         : read_tokens(o.input, cfg.conll_options());
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  std::ofstream rows(out / "gates.csv", std::ios::binary), summary(out / "gate_summary.csv", std::ios::binary);
  if (!rows || !summary) throw IoError("cannot write gate files in " + out.string());
  const std::size_t n = write_gate_trace(rows, summary, l.ckpt.model, sentences, l.table, cfg.seed);
  if (!rows.flush() || !summary.flush()) throw IoError("write failed in " + out.string());
  std::printf("wrote %zu gate values for %zu sentences\n", n, sentences.size());
  return 0;
}

int cmd_ablate(const Options& o) {
  const ModelConfig cfg = config_from_file(o);
  const Corpus corpus = load_corpus(cfg);
  const auto rows = run_ablation(cfg, corpus, [](const AblationRow& r) {
    note(r.head + " seed " + std::to_string(r.seed) + " dev " + std::to_string(r.dev_metric) + " test " +
         std::to_string(r.test_metric));
  });
  const fs::path out = cfg.out_dir;
  write_text_file(out / "ablation.csv", ablation_csv(cfg, rows));
  const std::string summary = ablation_summary_csv(cfg, rows);
  write_text_file(out / "ablation_summary.csv", summary);
  std::printf("%s", summary.c_str());
  return 0;
}

int cmd_benchmark(const Options& o) {
  const ModelConfig cfg = config_from_file(o);
  const Corpus corpus = load_corpus(cfg);
  const std::string table = benchmark_csv(cfg, run_benchmarks(cfg, corpus));
  write_text_file(fs::path(cfg.out_dir) / "benchmark.csv", table);
  std::printf("%s", table.c_str());
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const std::string& kind, const std::string& msg) {
  std::fprintf(stderr, "error: %s: %s\n", kind.c_str(), one_line(msg).c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated global-context sequence tagger"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train one model; writes metrics.csv, model.ckpt, report.json");
  add_common(train, o, true);
  auto* ablate = app.add_subcommand("ablate", "train every ablate head under every ablate seed");
  add_common(ablate, o, true);
  auto* bench = app.add_subcommand("benchmark", "training iterations per second for each benchmark head");
  add_common(bench, o, true);
  auto* eval = app.add_subcommand("eval", "score a checkpoint on labelled data");
  auto* predict = app.add_subcommand("predict", "tag a token file with a checkpoint");
  auto* gates = app.add_subcommand("export-gates", "dump gate values of a gated checkpoint");
  for (auto* cmd : {eval, predict, gates}) {
    add_common(cmd, o, false);
    cmd->add_option("--checkpoint", o.checkpoint, "checkpoint written by train")->required();
    cmd->add_option("--input", o.input, "input file (default: held-out split of the checkpoint config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what()) + 1;
  }

  try {
    if (*train) return cmd_train(o);
    if (*ablate) return cmd_ablate(o);
    if (*bench) return cmd_benchmark(o);
    if (*eval) return cmd_eval(o);
    if (*predict) return cmd_predict(o);
    if (*gates) return cmd_export_gates(o);
  } catch (const gcm::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no command given");
}
