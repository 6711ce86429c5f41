#include "gcm/train.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <numeric>
#include <sstream>

#include "gcm/error.hpp"
#include "gcm/random.hpp"

namespace gcm {

namespace {

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

// Runs body(i) for i in [0, n) on up to `threads` threads and rethrows the
// first failure (lowest index) afterwards.
template <class Body>
void parallel_for(std::size_t n, int threads, Body body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(threads)) if (threads != 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string to_string(MetricKind m) {
  return m == MetricKind::entity_f1 ? "entity_f1" : "token_accuracy";
}

MetricKind parse_metric_kind(std::string_view s) {
  if (s == "entity_f1") return MetricKind::entity_f1;
  if (s == "token_accuracy") return MetricKind::token_accuracy;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate must be in [0, 1)");
}

AdamW make_optimizer(const TaggerModel& model, const LearningRates& lrs) {
  const std::pair<std::string_view, double> order[] = {
      {kGroupBilstm, lrs.bilstm},       {kGroupContext, lrs.context},
      {kGroupAttention, lrs.attention}, {kGroupCrf, lrs.crf},
      {kGroupClassification, lrs.classification},
  };
  const auto params = model.parameters();
  std::vector<OptimizerGroup> groups;
  for (auto [name, lr] : order) {
    OptimizerGroup g{std::string(name), lr, name == kGroupCrf ? 0.0 : lrs.weight_decay, {}};
    for (const auto& p : params)
      if (p.group == name) g.params.push_back(p.tensor);
    if (!g.params.empty()) groups.push_back(std::move(g));
  }
  return AdamW(std::move(groups));
}

std::vector<Example> make_examples(const std::vector<Sentence>& sentences,
                                   const EmbeddingTable& table) {
  std::vector<Example> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back({&s, embed(s, table)});
  return out;
}

std::vector<double> train_batch(TaggerModel& model, AdamW& opt,
                                std::span<const Example* const> batch, double dropout_rate,
                                std::uint64_t dropout_seed, int threads) {
  opt.zero_grad();
  std::vector<std::unique_ptr<Tape>> tapes(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    tapes[i] = std::make_unique<Tape>();
    TapeScope scope(*tapes[i]);
    Rng rng(mix_seed(dropout_seed, i));
    const Example& ex = *batch[i];
    Tensor loss = model.loss(ex.Z, ex.sentence->tags, dropout_rate > 0 ? &rng : nullptr, dropout_rate);
    tapes[i]->compute_gradients(loss);
    losses[i] = loss.item();
  });
  for (auto& tape : tapes) tape->deposit();
  tapes.clear();
  for (double l : losses)
    if (!std::isfinite(l)) return losses;  // caller reports; no update on a bad batch
  opt.step();
  model.after_step();
  return losses;
}

std::vector<std::vector<int>> predict_all(const TaggerModel& model,
                                          const std::vector<Example>& data, int threads) {
  std::vector<std::vector<int>> out(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = model.predict(data[i].Z); });
  return out;
}

EvalReport evaluate(const TaggerModel& model, const std::vector<Example>& data,
                    const TagScheme& scheme, MetricKind metric, int threads) {
  const auto pred = predict_all(model, data, threads);
  std::vector<Sentence> gold;
  gold.reserve(data.size());
  for (const auto& ex : data) gold.push_back(*ex.sentence);
  return metric == MetricKind::entity_f1 ? entity_f1(gold, pred, scheme)
                                         : token_accuracy(gold, pred, scheme);
}

TrainResult train(const TaggerModel& initial, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const TagScheme& scheme,
                  const TrainConfig& cfg, const LearningRates& lrs,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty() || dev_set.empty()) throw UsageError("train: empty train or dev split");
  TaggerModel model = initial.clone();
  AdamW opt = make_optimizer(model, lrs);
  TrainResult result{{}, 0, -std::numeric_limits<double>::infinity(), model.clone(), 0.0};
  std::vector<std::size_t> order(train_set.size());
  std::size_t since_best = 0;
  std::size_t total_batches = 0;
  double train_seconds = 0.0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&train_set[order[i]]);
      const auto losses = train_batch(model, opt, batch, cfg.dropout_rate,
                                      mix_seed(cfg.seed, epoch, b + 1), cfg.threads);
      for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i])) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << " batch " << b << " sentence "
             << order[start + i] << " (lr " << opt.lr_snapshot() << ")";
          throw TrainingError(os.str());
        }
        loss_sum += losses[i];
      }
      ++total_batches;
    }
    train_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const EvalReport dev = evaluate(model, dev_set, scheme, cfg.metric, cfg.threads);
    const EpochLog entry{epoch, loss_sum / static_cast<double>(train_set.size()), dev.value};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (dev.value > result.best_dev_metric) {
      result.best_dev_metric = dev.value;
      result.best_epoch = epoch;
      result.best = model.clone();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.iterations_per_second =
      train_seconds > 0 ? static_cast<double>(total_batches) / train_seconds : 0.0;
  return result;
}

BenchmarkResult benchmark(const TaggerModel& model, const std::vector<Example>& data,
                          const LearningRates& lrs, const BenchmarkOptions& opts) {
  if (data.empty()) throw UsageError("benchmark: empty dataset");
  if (opts.batch_size == 0) throw ConfigError("benchmark: batch_size must be >= 1");
  TaggerModel copy = model.clone();
  AdamW opt = make_optimizer(copy, lrs);
  std::size_t cursor = 0;
  auto run = [&](std::size_t iteration) {
    std::vector<const Example*> batch;
    for (std::size_t i = 0; i < opts.batch_size; ++i) batch.push_back(&data[cursor++ % data.size()]);
    train_batch(copy, opt, batch, opts.dropout_rate, mix_seed(opts.seed, iteration), opts.threads);
  };
  for (std::size_t i = 0; i < opts.warmup; ++i) run(i);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < opts.iterations; ++i) run(opts.warmup + i);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {static_cast<double>(opts.iterations) / secs, opts.iterations, secs};
}

}  // namespace gcm
