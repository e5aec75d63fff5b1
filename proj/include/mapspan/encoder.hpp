#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapspan/bound.hpp"
#include "mapspan/graph.hpp"
#include "mapspan/rng.hpp"
#include "mapspan/vocab.hpp"

namespace mapspan {

enum class EncoderKind { bi_recurrent, self_attention };

EncoderKind encoder_kind_from_string(const std::string& s);
std::string to_string(EncoderKind kind);

struct EncoderConfig {
  std::size_t d = 32;      // hidden size; even, split across the two directions
  std::size_t embed = 32;  // embedding width
  std::size_t vocab_size = 0;
  EncoderKind kind = EncoderKind::bi_recurrent;

  void validate() const;
};

// Token representations for the passage (H, n rows) and question (H_Q, m rows).
struct EncoderOutput {
  Tensor H;
  Tensor H_Q;
};

struct EncoderNodes {
  NodeId H;
  NodeId H_Q;
};

Tensor uniform_tensor(Shape shape, Rng& rng, double radius = 0.08);

// Adds "enc."-prefixed parameters for the configured encoder kind: unit-variance
// embeddings, uniform(-0.08, 0.08) weights, identity-biased query/key projections
// for the self-attention kind.
void init_encoder(ParameterSet& params, const EncoderConfig& cfg, Rng& rng);

// The question and passage are packed as [question, SEP, passage] and encoded
// jointly; passage-position rows come back as H, question rows as H_Q. The
// bi-recurrent kind feeds each step [embedding ; question-aligned summary];
// the self-attention kind mixes one scaled dot-product layer over the pack.
EncoderNodes encode_nodes(Graph& g, const std::vector<TokenId>& question,
                          const std::vector<TokenId>& passage, const Bound& bound,
                          const EncoderConfig& cfg);

EncoderOutput encode(const std::vector<TokenId>& question, const std::vector<TokenId>& passage,
                     const ParameterSet& params, const EncoderConfig& cfg);

}  // namespace mapspan
