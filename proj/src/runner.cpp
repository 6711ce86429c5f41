#include "gcm/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gcm/error.hpp"
#include "json.hpp"

namespace gcm {

using json = nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string seed_header(std::uint64_t seed) { return "# seed=" + std::to_string(seed) + "\n"; }

json scores_json(const ClassScores& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

json report_to_json(const EvalReport& r) {
  json per_class = json::object();
  for (const auto& [label, s] : r.per_class) per_class[label] = scores_json(s);
  return {{"metric", r.metric},   {"value", r.value},     {"micro", scores_json(r.micro)},
          {"per_class", per_class}, {"correct", r.correct}, {"total", r.total},
          {"iterations_per_second", r.iterations_per_second}};
}

std::vector<Example> examples_or_empty(const std::vector<Sentence>& s, const EmbeddingTable& t) {
  return s.empty() ? std::vector<Example>{} : make_examples(s, t);
}

}  // namespace

ModelConfig with_head(ModelConfig cfg, HeadKind head) {
  cfg.head = head;
  cfg.encoder = head == HeadKind::context_no_bilstm ? EncoderKind::none : EncoderKind::bilstm;
  return cfg;
}

EmbeddingTable load_embedding_table(const ModelConfig& cfg) {
  if (cfg.data == "synthetic") return make_synthetic_task(cfg.synthetic_spec()).embeddings;
  if (cfg.embeddings_path.empty()) throw ConfigError("embeddings_path is required for data \"conll\"");
  return load_embeddings(cfg.embeddings_path);
}

std::vector<Sentence> default_eval_split(const ModelConfig& cfg, const TagScheme& scheme) {
  if (cfg.data == "synthetic") {
    auto task = make_synthetic_task(cfg.synthetic_spec());
    return task.test.empty() ? std::move(task.dev) : std::move(task.test);
  }
  const std::string& path = cfg.test_path.empty() ? cfg.dev_path : cfg.test_path;
  if (path.empty()) throw ConfigError("config names neither test_path nor dev_path");
  return read_conll(path, scheme, cfg.conll_options());
}

std::vector<Sentence> read_tokens(const std::filesystem::path& path, const ConllOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Sentence> out;
  Sentence cur;
  auto flush = [&] {
    if (cur.size()) out.push_back(std::move(cur));
    cur = {};
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("-DOCSTART-", 0) == 0) continue;
    std::string token;
    if (opts.column_sep) {
      token = line.substr(0, line.find(*opts.column_sep));
    } else {
      std::istringstream is(line);
      is >> token;
    }
    if (token.empty()) {
      flush();
      continue;
    }
    cur.tokens.push_back(token);
    cur.tags.push_back(0);
  }
  flush();
  return out;
}

RunOutcome train_and_evaluate(const ModelConfig& cfg, const Corpus& corpus,
                              const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_set = make_examples(corpus.train, corpus.embeddings);
  const auto dev_set = make_examples(corpus.dev, corpus.embeddings);
  const auto test_set = examples_or_empty(corpus.test, corpus.embeddings);
  const TaggerModel initial(cfg.arch(corpus.embeddings.dim(), corpus.scheme.size()), cfg.seed);
  const TrainConfig tc = cfg.train_config();
  TrainResult result = train(initial, train_set, dev_set, corpus.scheme, tc, cfg.learning_rates(), on_epoch);
  EvalReport dev = evaluate(result.best, dev_set, corpus.scheme, tc.metric, tc.threads);
  dev.iterations_per_second = result.iterations_per_second;
  EvalReport test;
  if (!test_set.empty()) {
    test = evaluate(result.best, test_set, corpus.scheme, tc.metric, tc.threads);
    test.iterations_per_second = result.iterations_per_second;
  }
  return {std::move(result), std::move(dev), std::move(test)};
}

std::string metrics_csv(const ModelConfig& cfg, const std::vector<EpochLog>& log) {
  std::string out = seed_header(cfg.seed) + "epoch,train_loss,dev_metric\n";
  for (const auto& e : log)
    out += std::to_string(e.epoch) + "," + num(e.train_loss) + "," + num(e.dev_metric) + "\n";
  return out;
}

std::string report_json(const ModelConfig& cfg, const RunOutcome& run) {
  json j = {{"seed", cfg.seed},
            {"config", json::parse(serialize_config(cfg))},
            {"best_epoch", run.result.best_epoch},
            {"best_dev_metric", run.result.best_dev_metric},
            {"epochs_run", run.result.log.size()},
            {"iterations_per_second", run.result.iterations_per_second},
            {"dev", report_to_json(run.dev)}};
  j["test"] = run.test.metric.empty() ? json(nullptr) : report_to_json(run.test);
  return j.dump(2) + "\n";
}

std::string eval_json(const ModelConfig& cfg, const EvalReport& report) {
  json j = report_to_json(report);
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

std::vector<AblationRow> run_ablation(const ModelConfig& cfg, const Corpus& corpus,
                                      const AblationCallback& on_row) {
  std::vector<AblationRow> rows;
  for (const auto& name : cfg.ablate_heads) {
    for (std::uint64_t seed : cfg.ablate_seeds) {
      ModelConfig run_cfg = with_head(cfg, parse_head_kind(name));
      run_cfg.seed = seed;
      const RunOutcome run = train_and_evaluate(run_cfg, corpus);
      AblationRow row{name, seed, run.dev.value,
                      run.test.metric.empty() ? run.dev.value : run.test.value, run.result.best_epoch};
      if (on_row) on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string ablation_csv(const ModelConfig& cfg, const std::vector<AblationRow>& rows) {
  std::string out = seed_header(cfg.seed) + "head,seed,metric,dev_metric,test_metric,best_epoch\n";
  for (const auto& r : rows)
    out += r.head + "," + std::to_string(r.seed) + "," + to_string(cfg.metric) + "," + num(r.dev_metric) +
           "," + num(r.test_metric) + "," + std::to_string(r.best_epoch) + "\n";
  return out;
}

std::string ablation_summary_csv(const ModelConfig& cfg, const std::vector<AblationRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : rows) {
    if (!values.count(r.head)) order.push_back(r.head);
    values[r.head].push_back(r.test_metric);
  }
  std::string out = seed_header(cfg.seed) + "head,seeds,mean_test_metric,min_test_metric,max_test_metric\n";
  for (const auto& head : order) {
    const auto& v = values[head];
    double sum = 0.0;
    for (double x : v) sum += x;
    out += head + "," + std::to_string(v.size()) + "," + num(sum / static_cast<double>(v.size())) + "," +
           num(*std::min_element(v.begin(), v.end())) + "," + num(*std::max_element(v.begin(), v.end())) + "\n";
  }
  return out;
}

std::vector<BenchmarkRow> run_benchmarks(const ModelConfig& cfg, const Corpus& corpus) {
  const auto data = make_examples(corpus.train, corpus.embeddings);
  BenchmarkOptions opts;
  opts.batch_size = cfg.batch_size;
  opts.warmup = cfg.benchmark_warmup;
  opts.iterations = cfg.benchmark_iterations;
  opts.dropout_rate = cfg.dropout_rate;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads == 0 ? 1 : cfg.threads;
  std::vector<BenchmarkRow> rows;
  for (const auto& name : cfg.benchmark_heads) {
    const ModelConfig head_cfg = with_head(cfg, parse_head_kind(name));
    head_cfg.validate();
    const TaggerModel model(head_cfg.arch(corpus.embeddings.dim(), corpus.scheme.size()), cfg.seed);
    rows.push_back({name, benchmark(model, data, head_cfg.learning_rates(), opts)});
  }
  return rows;
}

std::string benchmark_csv(const ModelConfig& cfg, const std::vector<BenchmarkRow>& rows) {
  std::string out = seed_header(cfg.seed) + "head,iterations_per_second,iterations,seconds,batch_size,threads\n";
  for (const auto& r : rows)
    out += r.head + "," + num(r.result.iterations_per_second) + "," + std::to_string(r.result.iterations) + "," +
           num(r.result.seconds) + "," + std::to_string(cfg.batch_size) + "," +
           std::to_string(cfg.threads == 0 ? 1 : cfg.threads) + "\n";
  return out;
}

std::size_t write_gate_trace(std::ostream& rows, std::ostream& summary, const TaggerModel& model,
                             const std::vector<Sentence>& sentences, const EmbeddingTable& table,
                             std::uint64_t seed) {
  if (!is_gated(model.arch().head))
    throw UsageError("head " + to_string(model.arch().head) + " has no gates to export");
  struct Bin {
    std::size_t count = 0, last_dim = 0;
    double sum = 0.0, min = 1.0, max = 0.0;
  };
  std::map<std::pair<char, std::size_t>, Bin> bins;
  std::size_t written = 0;
  rows << seed_header(seed) << "sentence_id,pos,token,gate,dim_index,division,value\n";
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const GateTrace trace = model.gate_trace(embed(sentences[s], table));
    for (std::size_t t = 0; t < trace.size(); ++t) {
      const std::string prefix = std::to_string(s) + "," + std::to_string(t) + "," +
                                 csv_field(sentences[s].tokens[t]) + ",";
      for (char gate : {'H', 'G'}) {
        const auto& values = gate == 'H' ? trace[t].i_H : trace[t].i_G;
        for (std::size_t k = 0; k < values.size(); ++k) {
          const std::size_t division = k / kGateDivisionWidth;
          rows << prefix << gate << ',' << k << ',' << division << ',' << num(values[k]) << '\n';
          Bin& b = bins[{gate, division}];
          ++b.count;
          b.last_dim = std::max(b.last_dim, k);
          b.sum += values[k];
          b.min = std::min(b.min, values[k]);
          b.max = std::max(b.max, values[k]);
          ++written;
        }
      }
    }
  }
  summary << seed_header(seed) << "gate,division,dim_begin,dim_end,count,mean,min,max\n";
  for (const auto& [key, b] : bins)
    summary << key.first << ',' << key.second << ',' << key.second * kGateDivisionWidth << ',' << b.last_dim << ',' << b.count << ','
            << num(b.sum / static_cast<double>(b.count)) << ',' << num(b.min) << ',' << num(b.max) << '\n';
  return written;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace gcm
