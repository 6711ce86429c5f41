#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "gcm/data.hpp"
#include "gcm/error.hpp"
#include "test_util.hpp"

using namespace gcm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GCM_TEST_DATA_DIR;

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("gcm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt");
    std::ofstream(path, std::ios::binary) << contents;
  }
  ~TempFile() { fs::remove(path); }
};

TagScheme ner_scheme() {
  return TagScheme(SchemeKind::bio,
                   {"O", "B-ORG", "I-ORG", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-MISC", "I-MISC"});
}

std::string error_of(auto fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("read_conll: single token sentence") {
  TempFile f("EU B-ORG\n\n");
  const auto s = read_conll(f.path, ner_scheme());
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens == std::vector<std::string>{"EU"});
  CHECK(s[0].tags == std::vector<int>{1});
}

TEST_CASE("read_conll: blocks, separators and tag column") {
  TempFile three("a O\nb B-PER\n\nc O\n\n\nd B-LOC\ne I-LOC");
  CHECK(read_conll(three.path, ner_scheme()).size() == 3);

  TempFile tabbed("New York\tNNP\tB-LOC\nis\tVBZ\tO\r\n");
  ConllOptions opts;
  opts.column_sep = '\t';
  const auto s = read_conll(tabbed.path, ner_scheme(), opts);
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens[0] == "New York");
  CHECK(s[0].tags == std::vector<int>{5, 0});

  TempFile middle("x NNP B-PER\n");
  ConllOptions col1;
  col1.tag_column = 1;
  TagScheme pos(SchemeKind::pos_flat, {"NNP"});
  CHECK(read_conll(middle.path, pos, col1)[0].tags == std::vector<int>{0});
}

TEST_CASE("read_conll: errors carry the line number") {
  TempFile unknown("a O\nb B-FOO\n");
  const auto msg = error_of([&] { read_conll(unknown.path, ner_scheme()); });
  CHECK(msg.find(":2:") != std::string::npos);
  CHECK(msg.find("B-FOO") != std::string::npos);

  TempFile ragged("a NN O\nb O\n");
  CHECK(error_of([&] { read_conll(ragged.path, ner_scheme()); }).find(":2:") != std::string::npos);

  CHECK_THROWS_AS(read_conll(kData / "does_not_exist.conll", ner_scheme()), IoError);
}

TEST_CASE("read_conll: fixture and write/read round trip") {
  const auto scheme = scan_tag_scheme(kData / "mini_ner.conll", SchemeKind::bio);
  CHECK(scheme.labels().front() == "O");
  const auto sentences = read_conll(kData / "mini_ner.conll", scheme);
  CHECK(sentences.size() == 10);
  CHECK(sentences[1].tokens == std::vector<std::string>{"Peter", "Blackburn"});

  TempFile out("");
  write_conll(out.path, sentences, scheme);
  const auto again = read_conll(out.path, scheme);
  REQUIRE(again.size() == sentences.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].tokens == sentences[i].tokens);
    CHECK(again[i].tags == sentences[i].tags);
  }
  // Idempotent: reading twice yields the same thing.
  const auto third = read_conll(kData / "mini_ner.conll", scheme);
  CHECK(third[9].tags == sentences[9].tags);
}

TEST_CASE("tag schemes: bijection and E2E-ABSA inventory") {
  const auto absa = TagScheme::e2e_absa();
  CHECK(absa.size() == 13);
  CHECK(absa.decode(0) == "O");
  for (const char* p : {"B", "I", "E", "S"})
    for (const char* s : {"POS", "NEG", "NEU"})
      CHECK(absa.encode(std::string(p) + "-" + s).has_value());
  for (const auto& scheme : {absa, ner_scheme()})
    for (std::size_t i = 0; i < scheme.size(); ++i) {
      const auto& label = scheme.decode(static_cast<int>(i));
      CHECK(scheme.encode(label) == static_cast<int>(i));
    }
  CHECK_FALSE(absa.encode("B-FOO").has_value());
  CHECK_THROWS_AS(absa.decode(13), DataError);
  CHECK_THROWS_AS(TagScheme(SchemeKind::bio, {"O", "O"}), DataError);
  CHECK(parse_scheme_kind("E2E-ABSA") == SchemeKind::e2e_absa);
  CHECK(to_string(SchemeKind::pos_flat) == "POS-flat");
}

TEST_CASE("load_embeddings: small file, OOV mean and width errors") {
  TempFile f("cat 1 2 3\ndog 3 4 5\n");
  const auto table = load_embeddings(f.path);
  CHECK(table.vocab_size() == 2);
  CHECK(table.dim() == 3);
  const auto dog = table.lookup("dog");
  CHECK(std::vector<double>(dog.begin(), dog.end()) == std::vector<double>{3, 4, 5});
  const auto oov = table.lookup("zebra");
  CHECK(std::vector<double>(oov.begin(), oov.end()) == std::vector<double>{2, 3, 4});
  CHECK(table.row_of("Cat") == 0);  // lowercase fallback
  CHECK(table.row_of("CAT!") == table.oov_row());

  TempFile bad("a 1 2\nb 1 2\nc 1\n");
  CHECK(error_of([&] { load_embeddings(bad.path); }).find(":3:") != std::string::npos);
}

TEST_CASE("load_embeddings: fixture row for 'the' is returned verbatim") {
  const fs::path path = kData / "emb50.txt";
  const auto table = load_embeddings(path);
  CHECK(table.vocab_size() == 50);
  // Independent parse of the fixture line.
  std::ifstream in(path);
  std::string line;
  std::vector<double> expected;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word != "the") continue;
    double v;
    while (is >> v) expected.push_back(v);
  }
  REQUIRE(expected.size() == 8);
  const auto got = table.lookup("the");
  CHECK(std::vector<double>(got.begin(), got.end()) == expected);
}

TEST_CASE("embed: rows follow tokens and all-OOV rows are identical") {
  TempFile f("cat 1 2 3\ndog 3 4 5\n");
  const auto table = load_embeddings(f.path);
  Sentence s{{"dog", "cat", "Dog"}, {0, 0, 0}};
  Tensor Z = embed(s, table);
  CHECK(Z.shape() == Shape{3, 3});
  CHECK_FALSE(Z.requires_grad());
  CHECK(gcm::testing::to_vec(Z) == std::vector<double>{3, 4, 5, 1, 2, 3, 3, 4, 5});

  Sentence unknown{{"x", "y", "z", "w"}, {0, 0, 0, 0}};
  Tensor U = embed(unknown, table);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(U.at(r, c) == U.at(0, c));
  CHECK(U.at(0, 0) == 2.0);

  CHECK_THROWS_AS(embed(Sentence{}, table), UsageError);
}
