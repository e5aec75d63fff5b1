#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mapspan/tensor.hpp"

namespace mapspan {

using NodeId = std::uint32_t;
using Mask = std::vector<char>;  // empty mask means "all positions valid"

enum class GatherAxis { rows, cols };

// Named, ordered collection of learnable tensors. Iteration order is the
// insertion order, which fixes gradient accumulation and optimizer order.
class ParameterSet {
 public:
  std::size_t add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }
  Tensor& tensor(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor& tensor(const std::string& name) const { return tensors_[index_of(name)]; }
  std::size_t count() const { return tensors_.size(); }
  std::size_t total_values() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

// Reverse-mode tape over dense float64 tensors.
//
// Every operation appends one record; records are therefore in topological
// order by construction. backward() seeds the (scalar) root with 1 and
// replays the records once, last to first, accumulating input gradients in
// a fixed order, so repeated replays are bitwise identical.
class Graph {
 public:
  NodeId input(Tensor t);

  // Binds every parameter as a gradient-tracked leaf; returns ids aligned
  // with the ParameterSet order.
  std::vector<NodeId> bind(const ParameterSet& params, bool track_grad = true);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double c);
  // Rank-1 operands are promoted (left operand to a row, right to a column)
  // and the unit dimension is squeezed from the result.
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId repeat_cols(NodeId v, std::size_t n);
  NodeId concat_rows(NodeId a, NodeId b);
  NodeId concat_vec(NodeId a, NodeId b);
  NodeId stack_rows(const std::vector<NodeId>& rows);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId masked_softmax(NodeId logits, const Mask& mask = {});
  NodeId gather(NodeId t, std::vector<std::size_t> indices, GatherAxis axis);
  NodeId reshape(NodeId t, Shape shape);
  NodeId sum(NodeId t);
  NodeId pick(NodeId t, std::size_t flat_index);
  // -log(max(x, floor)) for a scalar; past the floor the value is clamped,
  // the gradient is zeroed and the event counted.
  NodeId neg_log(NodeId t, double floor = 1e-30);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  // Gradient of the last backward() pass; zeros if the node was not reached.
  Tensor grad_tensor(NodeId id) const;
  bool needs_grad(NodeId id) const { return nodes_[id].needs_grad; }

  void backward(NodeId root);
  void zero_grads();

  std::size_t num_records() const { return records_.size(); }
  std::size_t clamp_events() const { return clamp_events_; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    bool needs_grad = false;
  };
  struct Record {
    NodeId out;
    std::vector<NodeId> inputs;
    std::function<void(Graph&, NodeId)> back;  // called with the record's own output id
  };

  NodeId make_node(Tensor value, bool needs_grad);
  NodeId emit(Tensor value, std::vector<NodeId> inputs, std::function<void(Graph&, NodeId)> back);
  std::vector<double>& grad_buf(NodeId id);
  const std::vector<double>& out_grad(NodeId id) const { return nodes_[id].grad; }
  bool wants(NodeId id) const { return nodes_[id].needs_grad; }
  bool any_needs_grad(const std::vector<NodeId>& ids) const;

  std::vector<Node> nodes_;
  std::vector<Record> records_;
  std::size_t clamp_events_ = 0;
};

// Forward-only softmax on raw values; shares the max-subtraction scheme with
// the graph op. Used where a distribution is needed without tape records.
std::vector<double> softmax_values(const std::vector<double>& logits, const Mask& mask = {});

}  // namespace mapspan
