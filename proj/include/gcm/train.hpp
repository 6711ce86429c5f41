#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcm/data.hpp"
#include "gcm/metrics.hpp"
#include "gcm/model.hpp"
#include "gcm/optim.hpp"

namespace gcm {

enum class MetricKind { entity_f1, token_accuracy };
std::string to_string(MetricKind m);
MetricKind parse_metric_kind(std::string_view s);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  double dropout_rate = 0.5;
  MetricKind metric = MetricKind::token_accuracy;
  // OpenMP threads for per-sentence work inside a batch; 0 = runtime default.
  int threads = 0;

  void validate() const;
};

// Per-group learning rates. The embedding table is frozen, so lr_embedding
// has no parameters to act on.
struct LearningRates {
  double embedding = 1e-5;
  double bilstm = 1e-3;
  double context = 1e-3;
  double attention = 1e-3;
  double crf = 1e-3;
  double classification = 1e-4;
  double weight_decay = 0.01;
};

// Builds one optimizer group per parameter group of `model`.
AdamW make_optimizer(const TaggerModel& model, const LearningRates& lrs);

// Sentence plus its embedded input matrix.
struct Example {
  const Sentence* sentence = nullptr;
  Tensor Z;
};
std::vector<Example> make_examples(const std::vector<Sentence>& sentences,
                                   const EmbeddingTable& table);

// One optimizer step over `batch`: per-sentence forward/backward (in parallel
// when threads != 1), gradient deposit in batch order, AdamW step. Returns the
// per-sentence losses. Dropout streams derive from `dropout_seed` and the
// position in the batch, so results do not depend on the thread count.
std::vector<double> train_batch(TaggerModel& model, AdamW& opt, std::span<const Example* const> batch,
                                double dropout_rate, std::uint64_t dropout_seed, int threads);

std::vector<std::vector<int>> predict_all(const TaggerModel& model,
                                          const std::vector<Example>& data, int threads);

EvalReport evaluate(const TaggerModel& model, const std::vector<Example>& data,
                    const TagScheme& scheme, MetricKind metric, int threads);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-sentence loss
  double dev_metric = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_metric = 0.0;
  TaggerModel best;
  double iterations_per_second = 0.0;  // wall-clock over all training batches
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded shuffled mini-batches each epoch, dev evaluation after each epoch,
// early stopping after `patience` epochs without strict improvement. Returns
// the best-dev model. TrainingError on a non-finite loss.
TrainResult train(const TaggerModel& initial, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const TagScheme& scheme,
                  const TrainConfig& cfg, const LearningRates& lrs,
                  const EpochCallback& on_epoch = {});

struct BenchmarkOptions {
  std::size_t batch_size = 16;
  std::size_t warmup = 10;
  std::size_t iterations = 100;
  double dropout_rate = 0.5;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BenchmarkResult {
  double iterations_per_second = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
};

// Mean training iterations (batch forward + backward + AdamW step) per second
// on a private copy of `model`, after `warmup` untimed iterations.
BenchmarkResult benchmark(const TaggerModel& model, const std::vector<Example>& data,
                          const LearningRates& lrs, const BenchmarkOptions& opts);

}  // namespace gcm
