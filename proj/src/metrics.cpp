#include "gcm/metrics.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "gcm/error.hpp"

namespace gcm {

namespace {

struct Parsed {
  char prefix = 'O';
  std::string type;
};

Parsed parse_tag(const std::string& tag) {
  if (tag.size() >= 3 && tag[1] == '-' && std::string_view("BIES").find(tag[0]) != std::string_view::npos)
    return {tag[0], tag.substr(2)};
  return {};
}

void finalize(ClassScores& s) {
  const auto tp = static_cast<double>(s.tp);
  if (s.tp + s.fp + s.fn == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return;
  }
  s.precision = s.tp + s.fp ? tp / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn ? tp / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
}

void check_lengths(const std::vector<Sentence>& gold, const std::vector<std::vector<int>>& pred) {
  if (gold.size() != pred.size())
    throw UsageError("evaluation: " + std::to_string(gold.size()) + " gold sentences vs " +
                     std::to_string(pred.size()) + " predictions");
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i].tags.size() != pred[i].size())
      throw UsageError("evaluation: sentence " + std::to_string(i) + " has " +
                       std::to_string(gold[i].tags.size()) + " gold tags vs " +
                       std::to_string(pred[i].size()) + " predicted");
}

std::vector<std::string> decode_all(std::span<const int> tags, const TagScheme& scheme) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (int t : tags) out.push_back(scheme.decode(t));
  return out;
}

}  // namespace

std::vector<Span> extract_spans(std::span<const std::string> tags, SchemeKind kind) {
  std::vector<Span> out;
  std::optional<Span> open;
  const bool strict = kind == SchemeKind::bioes || kind == SchemeKind::e2e_absa;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Parsed p = parse_tag(tags[t]);
    if (!strict) {
      if (open && p.prefix == 'I' && p.type == open->type) {
        open->end = t;
        continue;
      }
      if (open) out.push_back(*open);
      open.reset();
      if (p.prefix == 'B' || p.prefix == 'I') open = Span{t, t, p.type};
      continue;
    }
    switch (p.prefix) {
      case 'S':
        open.reset();
        out.push_back({t, t, p.type});
        break;
      case 'B':
        open = Span{t, t, p.type};
        break;
      case 'I':
        if (open && open->type == p.type) open->end = t;
        else open.reset();
        break;
      case 'E':
        if (open && open->type == p.type) {
          open->end = t;
          out.push_back(*open);
        }
        open.reset();
        break;
      default:
        open.reset();
    }
  }
  if (!strict && open) out.push_back(*open);
  return out;
}

EvalReport entity_f1(const std::vector<Sentence>& gold, const std::vector<std::vector<int>>& pred,
                     const TagScheme& scheme) {
  if (scheme.kind() == SchemeKind::pos_flat)
    throw UsageError("entity_f1 needs a span scheme (BIO, BIOES or E2E-ABSA)");
  check_lengths(gold, pred);
  EvalReport r;
  r.metric = "entity_f1";
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = extract_spans(decode_all(gold[i].tags, scheme), scheme.kind());
    const auto p = extract_spans(decode_all(pred[i], scheme), scheme.kind());
    const std::set<Span> gs(g.begin(), g.end());
    const std::set<Span> ps(p.begin(), p.end());
    for (const auto& s : ps) {
      auto& c = r.per_class[s.type];
      if (gs.count(s)) {
        ++c.tp;
        ++r.micro.tp;
      } else {
        ++c.fp;
        ++r.micro.fp;
      }
    }
    for (const auto& s : gs)
      if (!ps.count(s)) {
        ++r.per_class[s.type].fn;
        ++r.micro.fn;
      }
    for (std::size_t t = 0; t < pred[i].size(); ++t) r.correct += gold[i].tags[t] == pred[i][t];
    r.total += pred[i].size();
  }
  finalize(r.micro);
  for (auto& [_, c] : r.per_class) finalize(c);
  r.value = r.micro.f1;
  return r;
}

EvalReport token_accuracy(const std::vector<Sentence>& gold,
                          const std::vector<std::vector<int>>& pred, const TagScheme& scheme) {
  check_lengths(gold, pred);
  EvalReport r;
  r.metric = "token_accuracy";
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t t = 0; t < pred[i].size(); ++t) {
      const int g = gold[i].tags[t], p = pred[i][t];
      if (g == p) {
        ++r.correct;
        ++r.per_class[scheme.decode(g)].tp;
      } else {
        ++r.per_class[scheme.decode(p)].fp;
        ++r.per_class[scheme.decode(g)].fn;
      }
    }
    r.total += pred[i].size();
  }
  r.micro.tp = r.correct;
  r.micro.fp = r.micro.fn = r.total - r.correct;
  finalize(r.micro);
  for (auto& [_, c] : r.per_class) finalize(c);
  r.value = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

}  // namespace gcm
