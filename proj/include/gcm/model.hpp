#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcm/attention.hpp"
#include "gcm/bilstm.hpp"
#include "gcm/crf.hpp"
#include "gcm/global_context.hpp"
#include "gcm/random.hpp"
#include "gcm/tensor.hpp"

namespace gcm {

enum class HeadKind {
  plain,               // softmax classifier on H
  context,             // gated fusion with cross-composed G
  context_same,        // gated fusion with same-direction G
  context_unweighted,  // H_t + G, no gates
  context_no_bilstm,   // gated fusion directly on embeddings, endpoint G
  attention,           // multi-head self-attention residual
  crf,                 // linear-chain CRF on H
};

std::string to_string(HeadKind h);
HeadKind parse_head_kind(std::string_view s);
bool is_gated(HeadKind h);

enum class EncoderKind { bilstm, none };
std::string to_string(EncoderKind e);
EncoderKind parse_encoder_kind(std::string_view s);

struct ModelArch {
  HeadKind head = HeadKind::context;
  EncoderKind encoder = EncoderKind::bilstm;
  std::size_t input_dim = 0;       // d_e
  std::size_t hidden_size = 200;   // h, per direction
  std::size_t attention_heads = 4; // m
  std::size_t attention_head_dim = 0;  // d_c; 0 means encoder width / m
  std::size_t classes = 0;         // u

  // Throws ConfigError on inconsistent head/encoder/dims.
  void validate() const;
  std::size_t encoder_width() const;
};

// Parameter groups, matching the per-layer learning rates.
inline constexpr std::string_view kGroupBilstm = "bilstm";
inline constexpr std::string_view kGroupContext = "context";
inline constexpr std::string_view kGroupAttention = "attention";
inline constexpr std::string_view kGroupCrf = "crf";
inline constexpr std::string_view kGroupClassification = "classification";

struct NamedParam {
  std::string name;
  std::string group;
  Tensor tensor;
};

// Encoder + tagging head with named, grouped parameters.
class TaggerModel {
 public:
  TaggerModel(const ModelArch& arch, std::uint64_t seed);

  const ModelArch& arch() const { return arch_; }

  // Per-position logits (CRF: emissions), n x u. When `dropout_rng` is set,
  // inverted dropout with `dropout_rate` is applied to the encoder output H
  // (never to the global summary G).
  Tensor scores(const Tensor& Z, Rng* dropout_rng = nullptr, double dropout_rate = 0.0,
                GateTrace* trace = nullptr) const;

  // Training loss for one sentence: mean token cross-entropy, or the CRF
  // negative log-likelihood for the crf head.
  Tensor loss(const Tensor& Z, std::span<const int> gold, Rng* dropout_rng = nullptr,
              double dropout_rate = 0.0) const;

  std::vector<int> predict(const Tensor& Z) const;

  // Gate values for every position. UsageError for non-gated heads.
  GateTrace gate_trace(const Tensor& Z) const;

  std::vector<NamedParam> parameters() const;
  // Deep copy with independent parameter storage.
  TaggerModel clone() const;
  // Restores structural constraints after an optimizer step.
  void after_step();

 private:
  template <class F>
  void visit(F&& f);

  ModelArch arch_;
  std::optional<BiLstmParams> lstm_;
  std::optional<GateParams> gate_;
  std::optional<AttentionParams> attention_;
  std::optional<CrfParams> crf_;
  Tensor W_c_, b_c_;  // classifier for plain / unweighted / crf heads
};

}  // namespace gcm
