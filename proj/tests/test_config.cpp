#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "gcm/config.hpp"
#include "gcm/error.hpp"
#include "test_util.hpp"

using namespace gcm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GCM_TEST_DATA_DIR;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("gcm_cfg_" + std::to_string(::getpid()) + "_" + name);
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config: parse -> serialize -> parse is the identity") {
  const std::string text = R"({"head": "crf", "hidden_size": 12, "seed": 77, "dropout_rate": 0.25,
    "lr_context": 1e-5, "tag_scheme": "BIOES", "column_sep": "\t", "ablate_seeds": [4, 5],
    "benchmark_heads": ["plain"], "metric": "entity_f1", "data": "synthetic"})";
  const ModelConfig a = parse_config(text);
  CHECK(a.head == HeadKind::crf);
  CHECK(a.hidden_size == 12);
  CHECK(a.lr_context == 1e-5);
  CHECK(a.column_sep == "\t");
  const std::string once = serialize_config(a);
  const ModelConfig b = parse_config(once);
  CHECK(serialize_config(b) == once);
  CHECK(b.ablate_seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(b.tag_scheme == SchemeKind::bioes);
  CHECK(serialize_config(parse_config("{}")) == serialize_config(ModelConfig{}));
}

TEST_CASE("config: errors name the offending key") {
  CHECK(config_error(R"({"hiden_size": 3})").find("'hiden_size'") != std::string::npos);
  CHECK(config_error(R"({"hidden_size": "big"})").find("'hidden_size'") != std::string::npos);
  CHECK(config_error(R"({"head": "bert"})").find("'head'") != std::string::npos);
  CHECK_FALSE(config_error("[1, 2]").empty());
  CHECK_FALSE(config_error("{").empty());
}

TEST_CASE("config: validation") {
  ModelConfig c = parse_config(R"({"head": "context_no_bilstm", "encoder": "bilstm"})");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config(R"({"head": "context_no_bilstm"})");
  CHECK(c.encoder == EncoderKind::none);
  CHECK_NOTHROW(c.validate());
  c = parse_config(R"({"data": "web"})");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config(R"({"patience": 0})");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config(R"({"ablate_heads": ["plain", "nope"]})");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("load_corpus: fixture files and missing paths") {
  ModelConfig c;
  c.train_path = (kData / "mini_ner.conll").string();
  c.dev_path = c.train_path;
  c.embeddings_path = (kData / "emb50.txt").string();
  const Corpus corpus = load_corpus(c);
  CHECK(corpus.train.size() == 10);
  CHECK(corpus.embeddings.dim() == 8);
  CHECK(corpus.scheme.kind() == SchemeKind::bio);

  c.embedding_dim = 16;
  CHECK_THROWS_AS(load_corpus(c), ConfigError);
  c.embedding_dim = 0;
  c.dev_path = (kData / "missing.conll").string();
  CHECK_THROWS_AS(load_corpus(c), IoError);
  c.dev_path.clear();
  CHECK_THROWS_AS(load_corpus(c), ConfigError);
  CHECK_THROWS_AS(load_config(kData / "missing.json"), IoError);
}

TEST_CASE("checkpoint: round trip is bit-exact") {
  ModelConfig cfg;
  cfg.head = HeadKind::crf;
  cfg.hidden_size = 5;
  const TagScheme scheme(SchemeKind::bio, {"O", "B-X", "I-X"});
  ModelArch arch = cfg.arch(4, scheme.size());
  TaggerModel model(arch, 21);
  // Values that only survive an exact encoding.
  model.parameters()[0].tensor.mutable_data()[0] = 0.1 + 1e-17;
  model.parameters()[0].tensor.mutable_data()[1] = -3.0e-310;

  const fs::path path = temp_path("model.ckpt");
  save_checkpoint(path, cfg, scheme, model);
  const Checkpoint loaded = load_checkpoint(path);
  fs::remove(path);

  CHECK(serialize_config(loaded.config) == serialize_config(cfg));
  CHECK(loaded.scheme.labels() == scheme.labels());
  const auto a = model.parameters();
  const auto b = loaded.model.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].tensor.shape() == b[i].tensor.shape());
    CHECK(gcm::testing::to_vec(a[i].tensor) == gcm::testing::to_vec(b[i].tensor));
  }
}

TEST_CASE("checkpoint: malformed files are data errors") {
  const fs::path path = temp_path("bad.ckpt");
  std::ofstream(path) << "gcm-checkpoint 1\nconfig {}\nscheme BIO [\"O\",\"B-X\"]\ninput_dim 4\nparams 99\n";
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::ofstream(path) << "not a checkpoint\n";
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
