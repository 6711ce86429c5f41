#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gcm/config.hpp"

namespace gcm {

// Config-driven workflows shared by the command-line tool and the acceptance
// suite. Every output table starts with a "# seed=N" comment line.

// `cfg` with `head` swapped in and the encoder that head requires.
ModelConfig with_head(ModelConfig cfg, HeadKind head);

// Frozen embeddings for a config without loading any labelled split.
EmbeddingTable load_embedding_table(const ModelConfig& cfg);

// Held-out sentences used when no explicit input is given: test split when the
// config has one, dev otherwise.
std::vector<Sentence> default_eval_split(const ModelConfig& cfg, const TagScheme& scheme);

// Blank-line separated tokens (first column), tags ignored.
std::vector<Sentence> read_tokens(const std::filesystem::path& path, const ConllOptions& opts = {});

struct RunOutcome {
  TrainResult result;
  EvalReport dev;
  EvalReport test;  // empty metric name when the corpus has no test split
};

// Model initialisation and training both use cfg.seed.
RunOutcome train_and_evaluate(const ModelConfig& cfg, const Corpus& corpus,
                              const EpochCallback& on_epoch = {});

std::string metrics_csv(const ModelConfig& cfg, const std::vector<EpochLog>& log);
std::string report_json(const ModelConfig& cfg, const RunOutcome& run);
std::string eval_json(const ModelConfig& cfg, const EvalReport& report);

struct AblationRow {
  std::string head;
  std::uint64_t seed = 0;
  double dev_metric = 0.0;
  double test_metric = 0.0;  // dev metric again when there is no test split
  std::size_t best_epoch = 0;
};

using AblationCallback = std::function<void(const AblationRow&)>;

// Trains every configured head under every configured seed.
std::vector<AblationRow> run_ablation(const ModelConfig& cfg, const Corpus& corpus,
                                      const AblationCallback& on_row = {});
std::string ablation_csv(const ModelConfig& cfg, const std::vector<AblationRow>& rows);
// One row per head: mean and spread of the held-out metric across seeds.
std::string ablation_summary_csv(const ModelConfig& cfg, const std::vector<AblationRow>& rows);

struct BenchmarkRow {
  std::string head;
  BenchmarkResult result;
};

std::vector<BenchmarkRow> run_benchmarks(const ModelConfig& cfg, const Corpus& corpus);
std::string benchmark_csv(const ModelConfig& cfg, const std::vector<BenchmarkRow>& rows);

// Width of one gate division in the binned summary.
inline constexpr std::size_t kGateDivisionWidth = 100;

// Gate values of a gated model, one component per row:
// sentence_id,pos,token,gate,dim_index,division,value
// plus a per (gate, division) summary. Returns the number of component rows.
std::size_t write_gate_trace(std::ostream& rows, std::ostream& summary, const TaggerModel& model,
                             const std::vector<Sentence>& sentences, const EmbeddingTable& table,
                             std::uint64_t seed);

// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gcm
