#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gcm/tensor.hpp"

namespace gcm {

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<int> tags;

  std::size_t size() const { return tokens.size(); }
};

enum class SchemeKind { bio, bioes, pos_flat, e2e_absa };

std::string to_string(SchemeKind k);
SchemeKind parse_scheme_kind(std::string_view s);

// Ordered tag inventory. Index <-> label is a bijection.
class TagScheme {
 public:
  TagScheme() = default;
  TagScheme(SchemeKind kind, std::vector<std::string> labels);

  // {B,I,E,S} x {POS,NEG,NEU} plus O; O is index 0.
  static TagScheme e2e_absa();

  SchemeKind kind() const { return kind_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  std::optional<int> encode(std::string_view label) const;
  const std::string& decode(int index) const;

 private:
  SchemeKind kind_ = SchemeKind::pos_flat;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct ConllOptions {
  // Column separator; nullopt splits on runs of spaces/tabs.
  std::optional<char> column_sep;
  // Tag column index; negative counts from the end (-1 = last).
  int tag_column = -1;
};

// Blank-line separated sentences; token in column 0. Lines starting with
// "-DOCSTART-" are skipped.
std::vector<Sentence> read_conll(const std::filesystem::path& path, const TagScheme& scheme,
                                 const ConllOptions& opts = {});
void write_conll(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                 const TagScheme& scheme);

// Collects the tag inventory of a CoNLL file in first-seen order (with "O"
// moved to index 0 when present). E2E-ABSA ignores the file and returns the
// fixed 13-tag set.
TagScheme scan_tag_scheme(const std::filesystem::path& path, SchemeKind kind,
                          const ConllOptions& opts = {});

// Frozen static token embeddings. Lookup is exact, then lowercase, then the
// OOV row (element-wise mean of all rows); it never fails.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, std::vector<double> matrix, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return tokens_.size(); }
  std::size_t oov_row() const { return tokens_.size(); }

  std::size_t row_of(const std::string& token) const;
  std::span<const double> lookup(const std::string& token) const;
  std::span<const double> row(std::size_t r) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<double> matrix_;  // (|V| + 1) x dim, last row is OOV
  std::size_t dim_ = 0;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path);

// n x d_e matrix of token embeddings; never requires grad.
Tensor embed(const Sentence& s, const EmbeddingTable& table);

}  // namespace gcm
