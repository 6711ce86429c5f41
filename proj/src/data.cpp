#include "gcm/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gcm/error.hpp"

namespace gcm {

namespace {

std::vector<std::string> split_fields(const std::string& line, std::optional<char> sep) {
  std::vector<std::string> out;
  if (sep) {
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, *sep)) out.push_back(field);
    if (!line.empty() && line.back() == *sep) out.emplace_back();
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

// Streams (line number, token, tag) rows, calling on_break at sentence ends.
template <class Row, class Break>
void scan_conll(const std::filesystem::path& path, const ConllOptions& opts, Row on_row,
                Break on_break) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (is_blank(line)) {
      on_break();
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) continue;
    auto fields = split_fields(line, opts.column_sep);
    if (width == 0) width = fields.size();
    if (fields.size() != width || fields.size() < 2)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": ragged row, expected " +
                      std::to_string(std::max<std::size_t>(width, 2)) + " columns, got " +
                      std::to_string(fields.size()));
    const int col = opts.tag_column < 0 ? static_cast<int>(width) + opts.tag_column
                                        : opts.tag_column;
    if (col <= 0 || col >= static_cast<int>(width))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": tag column " +
                      std::to_string(opts.tag_column) + " out of range");
    on_row(lineno, fields[0], fields[static_cast<std::size_t>(col)]);
  }
  on_break();
}

}  // namespace

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::bio: return "BIO";
    case SchemeKind::bioes: return "BIOES";
    case SchemeKind::pos_flat: return "POS-flat";
    case SchemeKind::e2e_absa: return "E2E-ABSA";
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view s) {
  if (s == "BIO") return SchemeKind::bio;
  if (s == "BIOES") return SchemeKind::bioes;
  if (s == "POS-flat") return SchemeKind::pos_flat;
  if (s == "E2E-ABSA") return SchemeKind::e2e_absa;
  throw ConfigError("unknown tag scheme '" + std::string(s) + "'");
}

TagScheme::TagScheme(SchemeKind kind, std::vector<std::string> labels)
    : kind_(kind), labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second)
      throw DataError("duplicate tag '" + labels_[i] + "' in tag scheme");
  }
}

TagScheme TagScheme::e2e_absa() {
  std::vector<std::string> labels{"O"};
  for (const char* pos : {"B", "I", "E", "S"})
    for (const char* pol : {"POS", "NEG", "NEU"}) labels.push_back(std::string(pos) + "-" + pol);
  return TagScheme(SchemeKind::e2e_absa, std::move(labels));
}

std::optional<int> TagScheme::encode(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& TagScheme::decode(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= labels_.size())
    throw DataError("tag index " + std::to_string(index) + " out of range");
  return labels_[static_cast<std::size_t>(index)];
}

std::vector<Sentence> read_conll(const std::filesystem::path& path, const TagScheme& scheme,
                                 const ConllOptions& opts) {
  std::vector<Sentence> out;
  Sentence cur;
  scan_conll(
      path, opts,
      [&](std::size_t lineno, const std::string& tok, const std::string& tag) {
        auto idx = scheme.encode(tag);
        if (!idx)
          throw DataError(path.string() + ":" + std::to_string(lineno) + ": unknown tag '" +
                          tag + "'");
        cur.tokens.push_back(tok);
        cur.tags.push_back(*idx);
      },
      [&] {
        if (!cur.tokens.empty()) out.push_back(std::move(cur));
        cur = Sentence{};
      });
  return out;
}

void write_conll(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                 const TagScheme& scheme) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) os << s.tokens[i] << '\t' << scheme.decode(s.tags[i]) << '\n';
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

TagScheme scan_tag_scheme(const std::filesystem::path& path, SchemeKind kind,
                          const ConllOptions& opts) {
  if (kind == SchemeKind::e2e_absa) return TagScheme::e2e_absa();
  std::vector<std::string> labels;
  scan_conll(
      path, opts,
      [&](std::size_t, const std::string&, const std::string& tag) {
        if (std::find(labels.begin(), labels.end(), tag) == labels.end()) labels.push_back(tag);
      },
      [] {});
  if (auto it = std::find(labels.begin(), labels.end(), "O"); it != labels.end())
    std::rotate(labels.begin(), it, it + 1);
  return TagScheme(kind, std::move(labels));
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, std::vector<double> matrix,
                               std::size_t dim)
    : tokens_(std::move(tokens)), matrix_(std::move(matrix)), dim_(dim) {
  if (dim_ == 0 || tokens_.empty() || matrix_.size() != tokens_.size() * dim_)
    throw DataError("embedding table: inconsistent vocabulary/matrix sizes");
  for (std::size_t i = 0; i < tokens_.size(); ++i) vocab_.try_emplace(tokens_[i], i);
  std::vector<double> mean(dim_, 0.0);
  for (std::size_t r = 0; r < tokens_.size(); ++r)
    for (std::size_t j = 0; j < dim_; ++j) mean[j] += matrix_[r * dim_ + j];
  for (auto& v : mean) v /= static_cast<double>(tokens_.size());
  matrix_.insert(matrix_.end(), mean.begin(), mean.end());
}

std::size_t EmbeddingTable::row_of(const std::string& token) const {
  if (auto it = vocab_.find(token); it != vocab_.end()) return it->second;
  if (auto it = vocab_.find(ascii_lower(token)); it != vocab_.end()) return it->second;
  return oov_row();
}

std::span<const double> EmbeddingTable::row(std::size_t r) const {
  return std::span<const double>(matrix_).subspan(r * dim_, dim_);
}

std::span<const double> EmbeddingTable::lookup(const std::string& token) const {
  return row(row_of(token));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> tokens;
  std::vector<double> matrix;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (is_blank(line)) continue;
    auto fields = split_fields(line, ' ');
    fields.erase(std::remove(fields.begin(), fields.end(), std::string{}), fields.end());
    if (fields.size() < 2)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected token and values");
    std::vector<double> values;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      const auto& f = fields[i];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || p != f.data() + f.size())
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + f + "'");
      values.push_back(v);
    }
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": width " +
                      std::to_string(values.size()) + " differs from " + std::to_string(dim));
    tokens.push_back(fields[0]);
    matrix.insert(matrix.end(), values.begin(), values.end());
  }
  if (tokens.empty()) throw DataError(path.string() + ": no embeddings");
  return EmbeddingTable(std::move(tokens), std::move(matrix), dim);
}

Tensor embed(const Sentence& s, const EmbeddingTable& table) {
  if (s.size() == 0) throw UsageError("embed: empty sentence");
  std::vector<double> out;
  out.reserve(s.size() * table.dim());
  for (const auto& tok : s.tokens) {
    auto r = table.lookup(tok);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor({s.size(), table.dim()}, std::move(out));
}

}  // namespace gcm
