#include "gcm/synthetic.hpp"

#include <algorithm>
#include <random>

#include "gcm/error.hpp"
#include "gcm/random.hpp"

namespace gcm {

namespace {

std::string word_label(std::size_t cls, bool odd) {
  return "C" + std::to_string(cls) + (odd ? "-odd" : "-even");
}

}  // namespace

SyntheticTask make_synthetic_task(const SyntheticSpec& spec) {
  if (spec.min_len < 1 || spec.max_len < spec.min_len || spec.words == 0 ||
      spec.flag_types == 0 || spec.base_classes == 0 || spec.embedding_dim == 0)
    throw ConfigError("synthetic task: invalid sizes");
  Rng rng(spec.seed);

  std::vector<std::string> labels{"F"};
  for (std::size_t c = 0; c < spec.base_classes; ++c) {
    labels.push_back(word_label(c, false));
    labels.push_back(word_label(c, true));
  }
  TagScheme scheme(SchemeKind::pos_flat, labels);

  std::vector<std::string> vocab;
  std::vector<std::size_t> word_class(spec.words);
  for (std::size_t w = 0; w < spec.words; ++w) {
    vocab.push_back("w" + std::to_string(w));
    word_class[w] = w % spec.base_classes;
  }
  std::shuffle(word_class.begin(), word_class.end(), rng);
  for (std::size_t f = 0; f < spec.flag_types; ++f) vocab.push_back("f" + std::to_string(f));

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> matrix(vocab.size() * spec.embedding_dim);
  for (auto& v : matrix) v = gauss(rng);
  EmbeddingTable embeddings(vocab, std::move(matrix), spec.embedding_dim);

  std::uniform_int_distribution<std::size_t> len_dist(spec.min_len, spec.max_len);
  std::uniform_int_distribution<std::size_t> word_dist(0, spec.words - 1);
  std::uniform_int_distribution<std::size_t> flag_dist(0, spec.flag_types - 1);
  auto make_sentence = [&] {
    const std::size_t n = len_dist(rng);
    std::uniform_int_distribution<std::size_t> count_dist(0, std::min(spec.max_flags, n - 1));
    const std::size_t flags = count_dist(rng);
    std::vector<bool> is_flag(n, false);
    std::fill_n(is_flag.begin(), flags, true);
    std::shuffle(is_flag.begin(), is_flag.end(), rng);
    const bool odd = flags % 2 == 1;
    Sentence s;
    for (std::size_t t = 0; t < n; ++t) {
      if (is_flag[t]) {
        s.tokens.push_back("f" + std::to_string(flag_dist(rng)));
        s.tags.push_back(0);
      } else {
        const std::size_t w = word_dist(rng);
        s.tokens.push_back(vocab[w]);
        s.tags.push_back(*scheme.encode(word_label(word_class[w], odd)));
      }
    }
    return s;
  };

  SyntheticTask task{{}, {}, {}, scheme, std::move(embeddings)};
  for (std::size_t i = 0; i < spec.train; ++i) task.train.push_back(make_sentence());
  for (std::size_t i = 0; i < spec.dev; ++i) task.dev.push_back(make_sentence());
  for (std::size_t i = 0; i < spec.test; ++i) task.test.push_back(make_sentence());
  return task;
}

}  // namespace gcm
