#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcm/data.hpp"

namespace gcm {

// Tagging task whose labels need whole-sentence information.
//
// Sentences mix ordinary words "w<k>" with flag tokens "f<k>". Each word has a
// fixed base class; its tag is that class combined with the parity of the
// number of flags anywhere in the sentence ("<class>-even" / "<class>-odd").
// Flags carry the tag "F". A per-position readout of a BiLSTM sees the flag
// parity of the prefix and of the suffix separately, but the label depends on
// their XOR.
struct SyntheticSpec {
  std::size_t train = 2000;
  std::size_t dev = 500;
  std::size_t test = 500;
  std::size_t embedding_dim = 16;
  std::size_t words = 24;
  std::size_t flag_types = 4;
  std::size_t base_classes = 3;
  std::size_t min_len = 5;
  std::size_t max_len = 12;
  std::size_t max_flags = 3;
  std::uint64_t seed = 7;
};

struct SyntheticTask {
  std::vector<Sentence> train, dev, test;
  TagScheme scheme;
  EmbeddingTable embeddings;
};

SyntheticTask make_synthetic_task(const SyntheticSpec& spec);

}  // namespace gcm
