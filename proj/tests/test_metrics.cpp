#include <random>

#include "doctest.h"
#include "gcm/error.hpp"
#include "gcm/metrics.hpp"
#include "oracles.hpp"

using namespace gcm;

namespace {

Sentence sentence_of(const TagScheme& scheme, const std::vector<std::string>& tags) {
  Sentence s;
  for (const auto& t : tags) {
    s.tokens.push_back("x");
    s.tags.push_back(*scheme.encode(t));
  }
  return s;
}

std::vector<int> encode_all(const TagScheme& scheme, const std::vector<std::string>& tags) {
  std::vector<int> out;
  for (const auto& t : tags) out.push_back(*scheme.encode(t));
  return out;
}

const TagScheme kBio(SchemeKind::bio, {"O", "B-PER", "I-PER", "B-LOC", "I-LOC"});

TagScheme bioes_scheme() {
  std::vector<std::string> labels{"O"};
  for (const char* type : {"PER", "LOC"})
    for (const char* p : {"B", "I", "E", "S"}) labels.push_back(std::string(p) + "-" + type);
  return TagScheme(SchemeKind::bioes, labels);
}

}  // namespace

TEST_CASE("entity_f1: exact match, partial overlap and empty prediction") {
  const std::vector<std::string> gold{"B-PER", "I-PER", "O"};
  const std::vector<Sentence> g{sentence_of(kBio, gold)};

  const auto same = entity_f1(g, {encode_all(kBio, gold)}, kBio);
  CHECK(same.value == 1.0);

  const auto partial = entity_f1(g, {encode_all(kBio, {"B-PER", "O", "O"})}, kBio);
  CHECK(partial.micro.tp == 0);
  CHECK(partial.micro.fp == 1);
  CHECK(partial.micro.fn == 1);
  CHECK(partial.value == 0.0);

  const auto none = entity_f1(g, {encode_all(kBio, {"O", "O", "O"})}, kBio);
  CHECK(none.value == 0.0);
  CHECK(none.micro.precision == 0.0);
  CHECK(none.micro.recall == 0.0);

  const std::vector<Sentence> empty_gold{sentence_of(kBio, {"O", "O"})};
  CHECK(entity_f1(empty_gold, {encode_all(kBio, {"O", "O"})}, kBio).value == 1.0);
}

TEST_CASE("entity_f1: BIO uses conlleval chunking, BIOES is strict") {
  const std::vector<std::string> stray{"O", "I-PER", "I-PER", "B-LOC", "I-PER"};
  const auto spans = extract_spans(stray, SchemeKind::bio);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0] == Span{1, 2, "PER"});
  CHECK(spans[1] == Span{3, 3, "LOC"});
  CHECK(spans[2] == Span{4, 4, "PER"});

  const std::vector<std::string> broken{"B-PER", "I-PER", "O", "S-LOC", "B-LOC", "E-PER", "I-LOC", "E-LOC"};
  const auto strict = extract_spans(broken, SchemeKind::bioes);
  REQUIRE(strict.size() == 1);
  CHECK(strict[0] == Span{3, 3, "LOC"});
}

TEST_CASE("entity_f1: errors") {
  const std::vector<Sentence> g{sentence_of(kBio, {"O", "B-PER"})};
  CHECK_THROWS_AS(entity_f1(g, {{0}}, kBio), UsageError);
  CHECK_THROWS_AS(entity_f1(g, {}, kBio), UsageError);
  const TagScheme flat(SchemeKind::pos_flat, {"NN", "VB"});
  CHECK_THROWS_AS(entity_f1({sentence_of(flat, {"NN"})}, {{0}}, flat), UsageError);
}

TEST_CASE("entity_f1 agrees with the brute-force matcher on random BIOES pairs") {
  const TagScheme scheme = bioes_scheme();
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> tag(0, static_cast<int>(scheme.size()) - 1);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = len(rng);
    Sentence g;
    std::vector<int> p;
    std::vector<std::string> gs, ps;
    for (std::size_t t = 0; t < n; ++t) {
      g.tokens.push_back("x");
      g.tags.push_back(tag(rng));
      p.push_back(tag(rng));
      gs.push_back(scheme.decode(g.tags.back()));
      ps.push_back(scheme.decode(p.back()));
    }
    const auto report = entity_f1({g}, {p}, scheme);
    const auto want = gcm::testing::oracle_match(gcm::testing::oracle_bioes_spans(gs),
                                                 gcm::testing::oracle_bioes_spans(ps));
    CHECK(report.micro.tp == want.tp);
    CHECK(report.micro.fp == want.fp);
    CHECK(report.micro.fn == want.fn);
  }
}

TEST_CASE("micro scores are consistent with their own counts") {
  const TagScheme scheme = bioes_scheme();
  const std::vector<Sentence> g{sentence_of(scheme, {"S-PER", "B-LOC", "E-LOC", "O", "S-LOC"})};
  const auto r = entity_f1(g, {encode_all(scheme, {"S-PER", "B-LOC", "I-LOC", "O", "S-LOC"})}, scheme);
  CHECK(r.micro.tp == 2);
  CHECK(r.micro.fp == 0);
  CHECK(r.micro.fn == 1);
  CHECK(r.micro.precision == 1.0);
  CHECK(r.micro.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.value == doctest::Approx(2 * (2.0 / 3.0) / (1 + 2.0 / 3.0)));
  CHECK(r.per_class.at("LOC").fn == 1);
  CHECK(r.per_class.at("PER").f1 == 1.0);
}

TEST_CASE("token_accuracy") {
  const TagScheme flat(SchemeKind::pos_flat, {"NN", "VB", "DT"});
  const std::vector<Sentence> g{sentence_of(flat, {"DT", "NN", "VB", "NN"})};
  CHECK(token_accuracy(g, {{2, 0, 1, 0}}, flat).value == 1.0);
  CHECK(token_accuracy(g, {{0, 1, 0, 2}}, flat).value == 0.0);
  const auto r = token_accuracy(g, {{2, 0, 1, 1}}, flat);
  CHECK(r.value == 0.75);
  CHECK(r.per_class.at("NN").fn == 1);
  CHECK(r.per_class.at("VB").fp == 1);
  CHECK_THROWS_AS(token_accuracy(g, {{2, 0}}, flat), UsageError);
}
