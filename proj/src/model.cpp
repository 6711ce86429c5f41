#include "gcm/model.hpp"

#include <algorithm>
#include <cmath>

#include "gcm/error.hpp"

namespace gcm {

namespace {

constexpr std::pair<HeadKind, std::string_view> kHeadNames[] = {
    {HeadKind::plain, "plain"},
    {HeadKind::context, "context"},
    {HeadKind::context_same, "context_same"},
    {HeadKind::context_unweighted, "context_unweighted"},
    {HeadKind::context_no_bilstm, "context_no_bilstm"},
    {HeadKind::attention, "attention"},
    {HeadKind::crf, "crf"},
};

Tensor apply_dropout(const Tensor& H, Rng& rng, double rate) {
  if (rate <= 0.0) return H;
  if (rate >= 1.0) throw ConfigError("dropout_rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(H.size());
  const double scale_kept = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = keep(rng) ? scale_kept : 0.0;
  return mul(H, Tensor(H.shape(), std::move(mask)));
}

}  // namespace

std::string to_string(HeadKind h) {
  for (auto [k, name] : kHeadNames)
    if (k == h) return std::string(name);
  return "?";
}

HeadKind parse_head_kind(std::string_view s) {
  for (auto [k, name] : kHeadNames)
    if (name == s) return k;
  throw ConfigError("unknown head '" + std::string(s) + "'");
}

bool is_gated(HeadKind h) {
  return h == HeadKind::context || h == HeadKind::context_same ||
         h == HeadKind::context_no_bilstm;
}

std::string to_string(EncoderKind e) { return e == EncoderKind::bilstm ? "bilstm" : "none"; }

EncoderKind parse_encoder_kind(std::string_view s) {
  if (s == "bilstm") return EncoderKind::bilstm;
  if (s == "none") return EncoderKind::none;
  throw ConfigError("unknown encoder '" + std::string(s) + "'");
}

std::size_t ModelArch::encoder_width() const {
  return encoder == EncoderKind::bilstm ? 2 * hidden_size : input_dim;
}

void ModelArch::validate() const {
  if (input_dim == 0) throw ConfigError("embedding_dim must be positive");
  if (classes < 2) throw ConfigError("tag scheme must have at least 2 tags");
  if (encoder == EncoderKind::bilstm && hidden_size == 0)
    throw ConfigError("hidden_size must be positive");
  switch (head) {
    case HeadKind::context_no_bilstm:
      if (encoder != EncoderKind::none)
        throw ConfigError("head context_no_bilstm requires encoder none");
      break;
    case HeadKind::context:
    case HeadKind::context_same:
    case HeadKind::context_unweighted:
      if (encoder != EncoderKind::bilstm)
        throw ConfigError("head " + to_string(head) + " requires encoder bilstm");
      break;
    case HeadKind::attention: {
      const std::size_t d_c =
          attention_head_dim ? attention_head_dim
                             : (attention_heads ? encoder_width() / attention_heads : 0);
      if (attention_heads == 0 || d_c == 0 || attention_heads * d_c != encoder_width())
        throw ConfigError("attention: attention_heads x attention_head_dim must equal encoder width " +
                          std::to_string(encoder_width()));
      break;
    }
    case HeadKind::plain:
    case HeadKind::crf:
      break;
  }
}

TaggerModel::TaggerModel(const ModelArch& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  Rng rng(seed);
  if (arch_.encoder == EncoderKind::bilstm)
    lstm_ = BiLstmParams::init(arch_.input_dim, arch_.hidden_size, rng);
  const std::size_t d = arch_.encoder_width();
  const std::size_t u = arch_.classes;
  switch (arch_.head) {
    case HeadKind::context:
    case HeadKind::context_same:
      gate_ = GateParams::init(d, d, u, rng);
      break;
    case HeadKind::context_no_bilstm:
      gate_ = GateParams::init(d, 2 * d, u, rng);
      break;
    case HeadKind::attention: {
      const std::size_t d_c = arch_.attention_head_dim ? arch_.attention_head_dim
                                                       : d / arch_.attention_heads;
      attention_ = AttentionParams::init(d, arch_.attention_heads, d_c, u, rng);
      break;
    }
    case HeadKind::crf:
      crf_ = CrfParams::init(u);
      [[fallthrough]];
    case HeadKind::plain:
    case HeadKind::context_unweighted:
      W_c_ = uniform_param({d, u}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
      b_c_ = Tensor::zeros({u}, true);
      break;
  }
}

template <class F>
void TaggerModel::visit(F&& f) {
  if (lstm_) {
    for (auto [dir, p] : {std::pair{"forward", &lstm_->forward}, {"backward", &lstm_->backward}}) {
      const std::string base = std::string("bilstm.") + dir + ".";
      f(base + "W", kGroupBilstm, p->W);
      f(base + "U", kGroupBilstm, p->U);
      f(base + "b", kGroupBilstm, p->b);
    }
  }
  if (gate_) {
    f("context.W_H", kGroupContext, gate_->W_H);
    f("context.b_H", kGroupContext, gate_->b_H);
    f("context.W_G", kGroupContext, gate_->W_G);
    f("context.b_G", kGroupContext, gate_->b_G);
    f("classifier.W", kGroupClassification, gate_->W_c);
    f("classifier.b", kGroupClassification, gate_->b_c);
  }
  if (attention_) {
    for (std::size_t i = 0; i < attention_->heads(); ++i) {
      const std::string base = "attention.head" + std::to_string(i) + ".";
      f(base + "W_q", kGroupAttention, attention_->W_q[i]);
      f(base + "W_k", kGroupAttention, attention_->W_k[i]);
      f(base + "W_v", kGroupAttention, attention_->W_v[i]);
    }
    f("classifier.W", kGroupClassification, attention_->W_c);
  }
  if (crf_) f("crf.transitions", kGroupCrf, crf_->transitions);
  if (W_c_.defined()) {
    f("classifier.W", kGroupClassification, W_c_);
    f("classifier.b", kGroupClassification, b_c_);
  }
}

std::vector<NamedParam> TaggerModel::parameters() const {
  std::vector<NamedParam> out;
  const_cast<TaggerModel*>(this)->visit(
      [&](const std::string& name, std::string_view group, Tensor& t) {
        out.push_back({name, std::string(group), t});
      });
  return out;
}

TaggerModel TaggerModel::clone() const {
  TaggerModel copy = *this;
  copy.visit([](const std::string&, std::string_view, Tensor& t) {
    t = t.clone();
    t.set_requires_grad(true);
  });
  return copy;
}

void TaggerModel::after_step() {
  if (crf_) crf_->enforce_masks();
}

Tensor TaggerModel::scores(const Tensor& Z, Rng* dropout_rng, double dropout_rate,
                           GateTrace* trace) const {
  if (!Z.defined() || Z.rank() != 2 || Z.cols() != arch_.input_dim)
    throw DimensionError("model input must be n x " + std::to_string(arch_.input_dim));
  std::optional<BiLstmOutput> enc;
  if (lstm_) enc = encode(Z, *lstm_);
  const Tensor H_raw = enc ? enc->H : Z;
  const Tensor H = dropout_rng ? apply_dropout(H_raw, *dropout_rng, dropout_rate) : H_raw;

  switch (arch_.head) {
    case HeadKind::plain:
    case HeadKind::crf:
      return classifier_logits(H, W_c_, b_c_);
    case HeadKind::context:
    case HeadKind::context_same:
    case HeadKind::context_no_bilstm: {
      const GlobalSummary G =
          arch_.head == HeadKind::context_no_bilstm
              ? summarize(Z, Composition::endpoints)
              : summarize(*enc, arch_.head == HeadKind::context ? Composition::cross
                                                                : Composition::same);
      FusedSequence fused = gate_fuse_sequence(H, G, *gate_, trace != nullptr);
      if (trace) *trace = std::move(fused.trace);
      return classifier_logits(fused.fused, gate_->W_c, gate_->b_c);
    }
    case HeadKind::context_unweighted: {
      const GlobalSummary G = summarize(*enc, Composition::cross);
      return classifier_logits(fuse_unweighted(H, G.G), W_c_, b_c_);
    }
    case HeadKind::attention:
      return residual_logits(H, attend(H, *attention_).C, *attention_);
  }
  throw InternalError("scores: unknown head");
}

Tensor TaggerModel::loss(const Tensor& Z, std::span<const int> gold, Rng* dropout_rng,
                         double dropout_rate) const {
  const Tensor s = scores(Z, dropout_rng, dropout_rate);
  if (crf_) return crf_nll(s, gold, *crf_);
  return softmax_cross_entropy(s, gold);
}

std::vector<int> TaggerModel::predict(const Tensor& Z) const {
  const Tensor s = scores(Z);
  if (crf_) return viterbi(s, *crf_);
  std::vector<int> out(s.rows());
  const std::size_t u = s.cols();
  for (std::size_t t = 0; t < s.rows(); ++t) {
    const auto r = s.data().subspan(t * u, u);
    out[t] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

GateTrace TaggerModel::gate_trace(const Tensor& Z) const {
  if (!is_gated(arch_.head))
    throw UsageError("gate trace requires a gated head, model head is " + to_string(arch_.head));
  GateTrace trace;
  scores(Z, nullptr, 0.0, &trace);
  return trace;
}

}  // namespace gcm
