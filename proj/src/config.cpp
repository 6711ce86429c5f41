#include "gcm/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "gcm/error.hpp"
#include "json.hpp"

namespace gcm {

namespace {

using json = nlohmann::json;

struct Field {
  const char* key;
  std::function<void(ModelConfig&, const json&)> read;
  std::function<json(const ModelConfig&)> write;
};

template <class T>
Field plain_field(const char* key, T ModelConfig::*member) {
  return {key, [member](ModelConfig& c, const json& j) { c.*member = j.get<T>(); },
          [member](const ModelConfig& c) { return json(c.*member); }};
}

template <class T, class Parse, class Print>
Field enum_field(const char* key, T ModelConfig::*member, Parse parse, Print print) {
  return {key,
          [member, parse](ModelConfig& c, const json& j) { c.*member = parse(j.get<std::string>()); },
          [member, print](const ModelConfig& c) { return json(print(c.*member)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      enum_field("head", &ModelConfig::head, parse_head_kind,
                 [](HeadKind h) { return to_string(h); }),
      enum_field("encoder", &ModelConfig::encoder, parse_encoder_kind,
                 [](EncoderKind e) { return to_string(e); }),
      plain_field("embedding_dim", &ModelConfig::embedding_dim),
      plain_field("hidden_size", &ModelConfig::hidden_size),
      plain_field("attention_heads", &ModelConfig::attention_heads),
      plain_field("attention_head_dim", &ModelConfig::attention_head_dim),
      plain_field("batch_size", &ModelConfig::batch_size),
      plain_field("max_epochs", &ModelConfig::max_epochs),
      plain_field("patience", &ModelConfig::patience),
      plain_field("seed", &ModelConfig::seed),
      plain_field("dropout_rate", &ModelConfig::dropout_rate),
      enum_field("metric", &ModelConfig::metric, parse_metric_kind,
                 [](MetricKind m) { return to_string(m); }),
      plain_field("threads", &ModelConfig::threads),
      plain_field("lr_embedding", &ModelConfig::lr_embedding),
      plain_field("lr_bilstm", &ModelConfig::lr_bilstm),
      plain_field("lr_context", &ModelConfig::lr_context),
      plain_field("lr_attention", &ModelConfig::lr_attention),
      plain_field("lr_crf", &ModelConfig::lr_crf),
      plain_field("lr_classification", &ModelConfig::lr_classification),
      plain_field("weight_decay", &ModelConfig::weight_decay),
      plain_field("data", &ModelConfig::data),
      plain_field("train_path", &ModelConfig::train_path),
      plain_field("dev_path", &ModelConfig::dev_path),
      plain_field("test_path", &ModelConfig::test_path),
      plain_field("embeddings_path", &ModelConfig::embeddings_path),
      enum_field("tag_scheme", &ModelConfig::tag_scheme, parse_scheme_kind,
                 [](SchemeKind k) { return to_string(k); }),
      plain_field("column_sep", &ModelConfig::column_sep),
      plain_field("tag_column", &ModelConfig::tag_column),
      plain_field("synthetic_train", &ModelConfig::synthetic_train),
      plain_field("synthetic_dev", &ModelConfig::synthetic_dev),
      plain_field("synthetic_test", &ModelConfig::synthetic_test),
      plain_field("synthetic_max_flags", &ModelConfig::synthetic_max_flags),
      plain_field("synthetic_seed", &ModelConfig::synthetic_seed),
      plain_field("ablate_heads", &ModelConfig::ablate_heads),
      plain_field("ablate_seeds", &ModelConfig::ablate_seeds),
      plain_field("benchmark_heads", &ModelConfig::benchmark_heads),
      plain_field("benchmark_warmup", &ModelConfig::benchmark_warmup),
      plain_field("benchmark_iterations", &ModelConfig::benchmark_iterations),
      plain_field("out_dir", &ModelConfig::out_dir),
  };
  return f;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void check_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw ConfigError(key + " is required for data \"conll\"");
  if (!std::filesystem::exists(path)) throw IoError(key + ": no such file " + path);
}

}  // namespace

void ModelConfig::validate() const {
  train_config().validate();
  if (data != "conll" && data != "synthetic")
    throw ConfigError("data must be \"conll\" or \"synthetic\", got \"" + data + "\"");
  if (column_sep.size() > 1) throw ConfigError("column_sep must be empty or one character");
  for (const auto& h : ablate_heads) parse_head_kind(h);
  for (const auto& h : benchmark_heads) parse_head_kind(h);
  if (ablate_seeds.empty()) throw ConfigError("ablate_seeds must not be empty");
  // Head/encoder consistency does not depend on the data dimensions.
  const std::size_t probe_dim =
      embedding_dim ? embedding_dim : attention_heads * std::max<std::size_t>(attention_head_dim, 1);
  ModelArch probe = arch(probe_dim, 2);
  probe.validate();
}

TrainConfig ModelConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.seed = seed;
  t.dropout_rate = dropout_rate;
  t.metric = metric;
  t.threads = threads;
  return t;
}

LearningRates ModelConfig::learning_rates() const {
  return {lr_embedding, lr_bilstm, lr_context, lr_attention, lr_crf, lr_classification,
          weight_decay};
}

ModelArch ModelConfig::arch(std::size_t input_dim, std::size_t classes) const {
  ModelArch a;
  a.head = head;
  a.encoder = encoder;
  a.input_dim = input_dim;
  a.hidden_size = hidden_size;
  a.attention_heads = attention_heads;
  a.attention_head_dim = attention_head_dim;
  a.classes = classes;
  return a;
}

ConllOptions ModelConfig::conll_options() const {
  ConllOptions o;
  if (!column_sep.empty()) o.column_sep = column_sep[0];
  o.tag_column = tag_column;
  return o;
}

SyntheticSpec ModelConfig::synthetic_spec() const {
  SyntheticSpec s;
  s.train = synthetic_train;
  s.dev = synthetic_dev;
  s.test = synthetic_test;
  s.max_flags = synthetic_max_flags;
  s.seed = synthetic_seed;
  if (embedding_dim) s.embedding_dim = embedding_dim;
  return s;
}

ModelConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ModelConfig cfg;
  for (const auto& [key, value] : j.items()) {
    const auto& fs = fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return key == f.key; });
    if (it == fs.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->read(cfg, value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    } catch (const Error& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
  if (!j.contains("encoder") && cfg.head == HeadKind::context_no_bilstm)
    cfg.encoder = EncoderKind::none;
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string serialize_config(const ModelConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.write(cfg);
  return j.dump();
}

Corpus load_corpus(const ModelConfig& cfg) {
  if (cfg.data == "synthetic") {
    SyntheticTask task = make_synthetic_task(cfg.synthetic_spec());
    return {std::move(task.train), std::move(task.dev), std::move(task.test),
            std::move(task.scheme), std::move(task.embeddings)};
  }
  check_file("train_path", cfg.train_path);
  check_file("dev_path", cfg.dev_path);
  check_file("embeddings_path", cfg.embeddings_path);
  const auto opts = cfg.conll_options();
  Corpus c;
  c.scheme = scan_tag_scheme(cfg.train_path, cfg.tag_scheme, opts);
  c.train = read_conll(cfg.train_path, c.scheme, opts);
  c.dev = read_conll(cfg.dev_path, c.scheme, opts);
  if (!cfg.test_path.empty()) {
    check_file("test_path", cfg.test_path);
    c.test = read_conll(cfg.test_path, c.scheme, opts);
  }
  c.embeddings = load_embeddings(cfg.embeddings_path);
  if (cfg.embedding_dim && cfg.embedding_dim != c.embeddings.dim())
    throw ConfigError("embedding_dim " + std::to_string(cfg.embedding_dim) +
                      " does not match embedding file width " +
                      std::to_string(c.embeddings.dim()));
  return c;
}

}  // namespace gcm
