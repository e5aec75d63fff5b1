#include "mapspan/heads.hpp"

#include <cmath>

#include "mapspan/gru.hpp"

namespace mapspan {

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "ind") return HeadKind::ind;
  if (s == "vcp") return HeadKind::vcp;
  if (s == "map") return HeadKind::map;
  fail(ErrorCode::config, "unknown head kind: " + s);
}

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::ind: return "ind";
    case HeadKind::vcp: return "vcp";
    default: return "map";
  }
}

std::string to_string(Direction dir) {
  return dir == Direction::forward ? "forward" : "backward";
}

std::string map_prefix(Direction dir) { return dir == Direction::forward ? "map_f" : "map_b"; }

ProbVector ProbVector::checked(std::vector<double> probs, Mask mask) {
  if (!mask.empty() && mask.size() != probs.size())
    fail(ErrorCode::dimension, "probability mask length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0) || !std::isfinite(p))
      fail(ErrorCode::numeric, "probability entry " + std::to_string(i) + " is invalid");
    if (!mask.empty() && !mask[i] && p != 0.0)
      fail(ErrorCode::numeric, "masked position " + std::to_string(i) + " has nonzero mass");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorCode::numeric, "probabilities sum to " + std::to_string(sum));
  return ProbVector{std::move(probs), std::move(mask)};
}

ProbMatrix ProbMatrix::checked(std::size_t n, std::vector<double> probs) {
  if (probs.size() != n * n) fail(ErrorCode::dimension, "probability matrix is not n by n");
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = probs[i * n + j];
      if (!(p >= 0.0) || !std::isfinite(p))
        fail(ErrorCode::numeric, "probability matrix entry is invalid");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      fail(ErrorCode::numeric, "matrix row " + std::to_string(i) + " sums to " +
                                   std::to_string(sum));
  }
  return ProbMatrix{n, std::move(probs)};
}

void init_ind_params(ParameterSet& params, std::size_t d, Rng& rng) {
  params.add("ind.ws", uniform_tensor({d}, rng));
  params.add("ind.we", uniform_tensor({d}, rng));
}

void init_vcp_params(ParameterSet& params, std::size_t d, std::size_t l, Rng& rng) {
  params.add("vcp.v", uniform_tensor({l}, rng));
  params.add("vcp.V", uniform_tensor({l, d}, rng));
  params.add("vcp.we", uniform_tensor({l, d}, rng));
  params.add("vcp.vq", uniform_tensor({l}, rng));
  params.add("vcp.Vq", uniform_tensor({l, d}, rng));
  init_gru_cell(params, "vcp.cell", d, d, rng);
}

void init_map_params(ParameterSet& params, std::size_t d, std::size_t l, Direction dir,
                     Rng& rng) {
  const std::string p = map_prefix(dir);
  params.add(p + ".wfirst", uniform_tensor({d}, rng));
  params.add(p + ".v", uniform_tensor({l}, rng));
  params.add(p + ".V", uniform_tensor({l, 2 * d}, rng));
}

PairNodes ind_nodes(Graph& g, NodeId H, const Bound& b) {
  return PairNodes{g.masked_softmax(g.matmul(H, b["ind.ws"])),
                   g.masked_softmax(g.matmul(H, b["ind.we"]))};
}

NodeId vcp_init_state_node(Graph& g, NodeId H_Q, const Bound& b) {
  NodeId hq_t = g.transpose(H_Q);
  NodeId scores = g.matmul(b["vcp.vq"], g.tanh(g.matmul(b["vcp.Vq"], hq_t)));
  NodeId p_init = g.masked_softmax(scores);
  return g.matmul(hq_t, p_init);
}

NodeId vcp_pointer_node(Graph& g, NodeId H, NodeId h, const Bound& b) {
  const std::size_t n = g.value(H).shape()[0];
  NodeId mixed = g.matmul(b["vcp.V"], g.transpose(H));
  NodeId cond = g.repeat_cols(g.matmul(b["vcp.we"], h), n);
  NodeId logits = g.matmul(b["vcp.v"], g.tanh(g.add(mixed, cond)));
  return g.masked_softmax(logits);
}

PairNodes vcp_nodes(Graph& g, NodeId H, NodeId H_Q, const Bound& b) {
  const std::size_t d = g.value(H).shape()[1];
  NodeId h_s = vcp_init_state_node(g, H_Q, b);
  NodeId p_s = vcp_pointer_node(g, H, h_s, b);
  NodeId c_e = g.matmul(g.transpose(H), p_s);
  NodeId ones = g.input(Tensor::full({d}, 1.0));
  NodeId h_e = gru_step(g, gru_refs(b, "vcp.cell"), c_e, h_s, ones);
  NodeId p_e = vcp_pointer_node(g, H, h_e, b);
  return PairNodes{p_s, p_e};
}

NodeId map_first_node(Graph& g, NodeId H, const Bound& b, Direction dir) {
  return g.masked_softmax(g.matmul(H, b[map_prefix(dir) + ".wfirst"]));
}

NodeId map_row_logits_node(Graph& g, NodeId H, std::size_t i, const Bound& b, Direction dir,
                           const std::vector<std::size_t>& cols) {
  const std::size_t n = g.value(H).shape()[0];
  const std::size_t d = g.value(H).shape()[1];
  if (i >= n)
    fail(ErrorCode::index, "conditioning position " + std::to_string(i) + " out of range [0, " +
                               std::to_string(n) + ")");
  const std::string p = map_prefix(dir);
  NodeId h_i = g.reshape(g.gather(H, {i}, GatherAxis::rows), {d});
  NodeId keys = cols.empty() ? g.transpose(H)
                             : g.transpose(g.gather(H, cols, GatherAxis::rows));
  const std::size_t width = cols.empty() ? n : cols.size();
  NodeId block = g.concat_rows(keys, g.repeat_cols(h_i, width));
  return g.matmul(b[p + ".v"], g.tanh(g.matmul(b[p + ".V"], block)));
}

namespace {

struct ValueGraph {
  Graph g;
  Bound b;
  ValueGraph(const ParameterSet& params) : b(Bound::bind(g, params, /*track_grad=*/false)) {}
};

ProbVector vector_from(const Graph& g, NodeId node) {
  return ProbVector::checked(g.value(node).values());
}

}  // namespace

std::pair<ProbVector, ProbVector> ind_head(const EncoderOutput& enc,
                                           const ParameterSet& params) {
  ValueGraph vg(params);
  PairNodes nodes = ind_nodes(vg.g, vg.g.input(enc.H), vg.b);
  return {vector_from(vg.g, nodes.p_s), vector_from(vg.g, nodes.p_e)};
}

Tensor vcp_init_state(const Tensor& H_Q, const ParameterSet& params) {
  ValueGraph vg(params);
  return vg.g.value(vcp_init_state_node(vg.g, vg.g.input(H_Q), vg.b));
}

ProbVector vcp_pointer(const Tensor& H, const Tensor& h, const ParameterSet& params) {
  ValueGraph vg(params);
  return vector_from(vg.g, vcp_pointer_node(vg.g, vg.g.input(H), vg.g.input(h), vg.b));
}

std::pair<ProbVector, ProbVector> vcp_head(const EncoderOutput& enc,
                                           const ParameterSet& params) {
  ValueGraph vg(params);
  PairNodes nodes = vcp_nodes(vg.g, vg.g.input(enc.H), vg.g.input(enc.H_Q), vg.b);
  return {vector_from(vg.g, nodes.p_s), vector_from(vg.g, nodes.p_e)};
}

ProbVector map_first(const EncoderOutput& enc, const ParameterSet& params, Direction dir) {
  ValueGraph vg(params);
  return vector_from(vg.g, map_first_node(vg.g, vg.g.input(enc.H), vg.b, dir));
}

std::vector<double> map_row_logits(const Tensor& H, std::size_t i, const ParameterSet& params,
                                   Direction dir, const std::vector<std::size_t>& cols) {
  ValueGraph vg(params);
  return vg.g.value(map_row_logits_node(vg.g, vg.g.input(H), i, vg.b, dir, cols)).values();
}

std::vector<double> map_row_probs(const Tensor& H, std::size_t i, const ParameterSet& params,
                                  Direction dir) {
  return softmax_values(map_row_logits(H, i, params, dir));
}

ProbMatrix map_full_matrix(const EncoderOutput& enc, const ParameterSet& params, Direction dir,
                           std::size_t sequence_cap) {
  const std::size_t n = enc.H.shape()[0];
  if (n > sequence_cap)
    fail(ErrorCode::resource, "passage length " + std::to_string(n) +
                                  " exceeds the full-matrix cap of " +
                                  std::to_string(sequence_cap) + "; use sampled training");
  ValueGraph vg(params);
  NodeId H = vg.g.input(enc.H);
  std::vector<double> probs(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    NodeId logits = map_row_logits_node(vg.g, H, i, vg.b, dir);
    std::vector<double> row = softmax_values(vg.g.value(logits).values());
    std::copy(row.begin(), row.end(), probs.begin() + i * n);
  }
  return ProbMatrix::checked(n, std::move(probs));
}

}  // namespace mapspan
