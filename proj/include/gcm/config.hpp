#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcm/data.hpp"
#include "gcm/model.hpp"
#include "gcm/synthetic.hpp"
#include "gcm/train.hpp"

namespace gcm {

// Everything a run needs. Serialized as a flat JSON object whose keys are the
// field names below; unknown keys are rejected.
struct ModelConfig {
  // architecture
  HeadKind head = HeadKind::context;
  EncoderKind encoder = EncoderKind::bilstm;
  std::size_t embedding_dim = 0;  // 0: take from the embedding file
  std::size_t hidden_size = 200;
  std::size_t attention_heads = 4;
  std::size_t attention_head_dim = 0;

  // training
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  double dropout_rate = 0.5;
  MetricKind metric = MetricKind::token_accuracy;
  int threads = 0;

  // per-group learning rates
  double lr_embedding = 1e-5;
  double lr_bilstm = 1e-3;
  double lr_context = 1e-3;
  double lr_attention = 1e-3;
  double lr_crf = 1e-3;
  double lr_classification = 1e-4;
  double weight_decay = 0.01;

  // data: "conll" reads the paths below, "synthetic" generates the task
  std::string data = "conll";
  std::string train_path, dev_path, test_path, embeddings_path;
  SchemeKind tag_scheme = SchemeKind::bio;
  std::string column_sep;  // empty: whitespace runs
  int tag_column = -1;

  std::size_t synthetic_train = 2000;
  std::size_t synthetic_dev = 500;
  std::size_t synthetic_test = 500;
  std::size_t synthetic_max_flags = 3;
  std::uint64_t synthetic_seed = 7;

  // ablate / benchmark
  std::vector<std::string> ablate_heads{"plain", "context", "context_same", "context_unweighted"};
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3};
  std::vector<std::string> benchmark_heads{"plain", "context", "crf"};
  std::size_t benchmark_warmup = 10;
  std::size_t benchmark_iterations = 100;

  std::string out_dir = "out";

  // Throws ConfigError when the combination is inconsistent.
  void validate() const;

  TrainConfig train_config() const;
  LearningRates learning_rates() const;
  ModelArch arch(std::size_t input_dim, std::size_t classes) const;
  ConllOptions conll_options() const;
  SyntheticSpec synthetic_spec() const;
};

// Parses a flat JSON object. Missing keys keep their defaults.
ModelConfig parse_config(const std::string& json_text);
ModelConfig load_config(const std::filesystem::path& path);
// Compact single-line JSON with every key.
std::string serialize_config(const ModelConfig& cfg);

// Loaded data for a config: sentences, tag scheme and the frozen embeddings.
struct Corpus {
  std::vector<Sentence> train, dev, test;
  TagScheme scheme;
  EmbeddingTable embeddings;
};
Corpus load_corpus(const ModelConfig& cfg);

struct Checkpoint {
  ModelConfig config;
  TagScheme scheme;
  TaggerModel model;
};

// Text checkpoint: config echo, tag labels, and every named parameter with
// values in hexadecimal floating point, so a round trip is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const TagScheme& scheme, const TaggerModel& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gcm
