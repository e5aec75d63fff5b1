#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mapspan/bound.hpp"
#include "mapspan/encoder.hpp"
#include "mapspan/graph.hpp"
#include "mapspan/rng.hpp"

namespace mapspan {

enum class HeadKind { ind, vcp, map };
enum class Direction { forward, backward };

HeadKind head_kind_from_string(const std::string& s);
std::string to_string(HeadKind kind);
std::string to_string(Direction dir);

// Parameter name prefix for a conditional-matrix direction: "map_f" / "map_b".
std::string map_prefix(Direction dir);

// Distribution over token positions. Masked entries are exactly 0 and the
// rest sum to 1 within 1e-9; checked() enforces this.
struct ProbVector {
  std::vector<double> probs;
  Mask mask;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  static ProbVector checked(std::vector<double> probs, Mask mask = {});
};

// Row-stochastic n-by-n matrix: row i conditions on position i.
struct ProbMatrix {
  std::size_t n = 0;
  std::vector<double> probs;  // row-major

  double at(std::size_t i, std::size_t j) const { return probs[i * n + j]; }
  static ProbMatrix checked(std::size_t n, std::vector<double> probs);
};

void init_ind_params(ParameterSet& params, std::size_t d, Rng& rng);
void init_vcp_params(ParameterSet& params, std::size_t d, std::size_t l, Rng& rng);
void init_map_params(ParameterSet& params, std::size_t d, std::size_t l, Direction dir,
                     Rng& rng);

struct PairNodes {
  NodeId p_s;
  NodeId p_e;
};

// Graph builders, used by both training (with gradients) and inference.
PairNodes ind_nodes(Graph& g, NodeId H, const Bound& b);
NodeId vcp_init_state_node(Graph& g, NodeId H_Q, const Bound& b);
NodeId vcp_pointer_node(Graph& g, NodeId H, NodeId h, const Bound& b);
PairNodes vcp_nodes(Graph& g, NodeId H, NodeId H_Q, const Bound& b);
NodeId map_first_node(Graph& g, NodeId H, const Bound& b, Direction dir);
// Conditional-row logits for conditioning position i. With cols empty the
// full row of n logits is produced; otherwise only the listed columns, on
// the same per-column arithmetic path (slice consistency).
NodeId map_row_logits_node(Graph& g, NodeId H, std::size_t i, const Bound& b, Direction dir,
                           const std::vector<std::size_t>& cols = {});

// Value-level heads over an encoded example.
std::pair<ProbVector, ProbVector> ind_head(const EncoderOutput& enc, const ParameterSet& params);
Tensor vcp_init_state(const Tensor& H_Q, const ParameterSet& params);
ProbVector vcp_pointer(const Tensor& H, const Tensor& h, const ParameterSet& params);
std::pair<ProbVector, ProbVector> vcp_head(const EncoderOutput& enc, const ParameterSet& params);
ProbVector map_first(const EncoderOutput& enc, const ParameterSet& params, Direction dir);
std::vector<double> map_row_probs(const Tensor& H, std::size_t i, const ParameterSet& params,
                                  Direction dir);
std::vector<double> map_row_logits(const Tensor& H, std::size_t i, const ParameterSet& params,
                                   Direction dir, const std::vector<std::size_t>& cols = {});
ProbMatrix map_full_matrix(const EncoderOutput& enc, const ParameterSet& params, Direction dir,
                           std::size_t sequence_cap = 2048);

}  // namespace mapspan
