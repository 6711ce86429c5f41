#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gcm/data.hpp"

namespace gcm {

// Inclusive token range [begin, end] with an entity type.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string type;
  auto operator<=>(const Span&) const = default;
};

// BIO follows conlleval: an I-X that does not continue an X chunk opens one.
// BIOES / E2E-ABSA are strict: only S-X and B-X I-X* E-X form spans.
std::vector<Span> extract_spans(std::span<const std::string> tags, SchemeKind kind);

struct ClassScores {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  std::string metric;  // "entity_f1" or "token_accuracy"
  double value = 0.0;
  ClassScores micro;
  std::map<std::string, ClassScores> per_class;
  std::size_t correct = 0, total = 0;  // token counts
  double iterations_per_second = 0.0;  // 0 when not measured
};

// Exact (span, type) micro P/R/F1. With no gold and no predicted spans all
// three are 1. UsageError on length mismatch or a non-span scheme.
EvalReport entity_f1(const std::vector<Sentence>& gold, const std::vector<std::vector<int>>& pred,
                     const TagScheme& scheme);

// Fraction of positions tagged correctly; per-class scores are per tag.
EvalReport token_accuracy(const std::vector<Sentence>& gold,
                          const std::vector<std::vector<int>>& pred, const TagScheme& scheme);

}  // namespace gcm
