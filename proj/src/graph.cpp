#include "mapspan/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mapspan {

std::size_t ParameterSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) fail(ErrorCode::invalid_argument, "duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.push_back(std::move(t));
  return tensors_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::invalid_argument, "unknown parameter: " + name);
  return it->second;
}

std::size_t ParameterSet::total_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

NodeId Graph::make_node(Tensor value, bool needs_grad) {
  nodes_.push_back(Node{std::move(value), {}, needs_grad});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor t) {
  bool ng = t.requires_grad();
  return make_node(std::move(t), ng);
}

std::vector<NodeId> Graph::bind(const ParameterSet& params, bool track_grad) {
  std::vector<NodeId> ids;
  ids.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    Tensor t = params.tensor(i);
    t.set_requires_grad(track_grad);
    ids.push_back(input(std::move(t)));
  }
  return ids;
}

bool Graph::any_needs_grad(const std::vector<NodeId>& ids) const {
  for (NodeId id : ids)
    if (nodes_[id].needs_grad) return true;
  return false;
}

NodeId Graph::emit(Tensor value, std::vector<NodeId> inputs,
                   std::function<void(Graph&, NodeId)> back) {
  bool ng = any_needs_grad(inputs);
  NodeId out = make_node(std::move(value), ng);
  records_.push_back(Record{out, std::move(inputs), std::move(back)});
  return out;
}

std::vector<double>& Graph::grad_buf(NodeId id) {
  auto& g = nodes_[id].grad;
  if (g.size() != nodes_[id].value.size()) g.assign(nodes_[id].value.size(), 0.0);
  return g;
}

Tensor Graph::grad_tensor(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == n.value.size()) return Tensor(n.value.shape(), n.grad);
  return Tensor::zeros(n.value.shape());
}

void Graph::zero_grads() {
  for (auto& n : nodes_) n.grad.clear();
}

void Graph::backward(NodeId root) {
  const Tensor& rv = nodes_[root].value;
  if (rv.size() != 1)
    fail(ErrorCode::invalid_argument,
         "backward root must be a scalar, got shape " + shape_str(rv.shape()));
  zero_grads();
  grad_buf(root)[0] = 1.0;

  // Only records on a path to the root contribute; mark them in one reverse
  // sweep and apply each exactly once.
  std::vector<char> active(nodes_.size(), 0);
  active[root] = 1;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (!active[it->out] || !nodes_[it->out].needs_grad) continue;
    for (NodeId in : it->inputs) active[in] = 1;
    it->back(*this, it->out);
  }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    fail(ErrorCode::dimension, std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                   " vs " + shape_str(b.shape()));
}

void check_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    fail(ErrorCode::dimension, std::string(op) + ": expected rank-2 tensor, got shape " +
                                   shape_str(t.shape()));
}

}  // namespace

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  check_same_shape(va, vb, "add");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return emit(Tensor(va.shape(), std::move(out)), {a, b}, [a, b](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      auto& gb = g.grad_buf(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
    }
  });
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  check_same_shape(va, vb, "sub");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  return emit(Tensor(va.shape(), std::move(out)), {a, b}, [a, b](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      auto& gb = g.grad_buf(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  check_same_shape(va, vb, "mul");
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return emit(Tensor(va.shape(), std::move(out)), {a, b}, [a, b](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    const Tensor &xa = g.value(a), &xb = g.value(b);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * xb[i];
    }
    if (g.wants(b)) {
      auto& gb = g.grad_buf(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * xa[i];
    }
  });
}

NodeId Graph::scale(NodeId a, double c) {
  const Tensor& va = value(a);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * c;
  return emit(Tensor(va.shape(), std::move(out)), {a}, [a, c](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    }
  });
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  if (va.rank() < 1 || va.rank() > 2 || vb.rank() < 1 || vb.rank() > 2)
    fail(ErrorCode::dimension, "matmul: operands must be rank 1 or 2, got " +
                                   shape_str(va.shape()) + " and " + shape_str(vb.shape()));
  const bool vec_a = va.rank() == 1, vec_b = vb.rank() == 1;
  const std::size_t p = vec_a ? 1 : va.shape()[0];
  const std::size_t q = vec_a ? va.shape()[0] : va.shape()[1];
  const std::size_t qb = vec_b ? vb.shape()[0] : vb.shape()[0];
  const std::size_t r = vec_b ? 1 : vb.shape()[1];
  if (q != qb)
    fail(ErrorCode::dimension, "matmul: inner dimensions differ, " + shape_str(va.shape()) +
                                   " x " + shape_str(vb.shape()));

  std::vector<double> out(p * r, 0.0);
  const double *A = va.data(), *B = vb.data();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = A[i * q + k];
      const double* brow = B + k * r;
      double* orow = out.data() + i * r;
      for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
    }

  Shape out_shape;
  if (vec_a && vec_b)
    out_shape = {1};
  else if (vec_a)
    out_shape = {r};
  else if (vec_b)
    out_shape = {p};
  else
    out_shape = {p, r};

  return emit(Tensor(std::move(out_shape), std::move(out)), {a, b},
              [a, b, p, q, r](Graph& g, NodeId o) {
                const auto& go = g.out_grad(o);
                const Tensor &xa = g.value(a), &xb = g.value(b);
                if (g.wants(a)) {
                  auto& ga = g.grad_buf(a);
                  for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t k = 0; k < q; ++k) {
                      double acc = 0.0;
                      for (std::size_t j = 0; j < r; ++j) acc += go[i * r + j] * xb[k * r + j];
                      ga[i * q + k] += acc;
                    }
                }
                if (g.wants(b)) {
                  auto& gb = g.grad_buf(b);
                  for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t k = 0; k < q; ++k) {
                      const double aik = xa[i * q + k];
                      for (std::size_t j = 0; j < r; ++j) gb[k * r + j] += aik * go[i * r + j];
                    }
                }
              });
}

NodeId Graph::transpose(NodeId a) {
  const Tensor& va = value(a);
  check_matrix(va, "transpose");
  const std::size_t p = va.shape()[0], q = va.shape()[1];
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out[j * p + i] = va[i * q + j];
  return emit(Tensor({q, p}, std::move(out)), {a}, [a, p, q](Graph& g, NodeId o) {
    if (!g.wants(a)) return;
    const auto& go = g.out_grad(o);
    auto& ga = g.grad_buf(a);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) ga[i * q + j] += go[j * p + i];
  });
}

NodeId Graph::repeat_cols(NodeId v, std::size_t n) {
  const Tensor& vv = value(v);
  if (n == 0) fail(ErrorCode::invalid_argument, "repeat_cols: repeat count must be at least 1");
  if (vv.rank() != 1 && !(vv.rank() == 2 && vv.shape()[1] == 1))
    fail(ErrorCode::dimension,
         "repeat_cols: expected a vector, got shape " + shape_str(vv.shape()));
  const std::size_t l = vv.size();
  std::vector<double> out(l * n);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = vv[i];
  return emit(Tensor({l, n}, std::move(out)), {v}, [v, l, n](Graph& g, NodeId o) {
    if (!g.wants(v)) return;
    const auto& go = g.out_grad(o);
    auto& gv = g.grad_buf(v);
    for (std::size_t i = 0; i < l; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j];
      gv[i] += acc;
    }
  });
}

NodeId Graph::concat_rows(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  check_matrix(va, "concat_rows");
  check_matrix(vb, "concat_rows");
  const std::size_t p = va.shape()[0], q = vb.shape()[0], n = va.shape()[1];
  if (vb.shape()[1] != n)
    fail(ErrorCode::dimension, "concat_rows: column counts differ, " + shape_str(va.shape()) +
                                   " vs " + shape_str(vb.shape()));
  std::vector<double> out;
  out.reserve(va.size() + vb.size());
  out.insert(out.end(), va.values().begin(), va.values().end());
  out.insert(out.end(), vb.values().begin(), vb.values().end());
  return emit(Tensor({p + q, n}, std::move(out)), {a, b}, [a, b, p, q, n](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < p * n; ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      auto& gb = g.grad_buf(b);
      for (std::size_t i = 0; i < q * n; ++i) gb[i] += go[p * n + i];
    }
  });
}

NodeId Graph::concat_vec(NodeId a, NodeId b) {
  const Tensor &va = value(a), &vb = value(b);
  if (va.rank() != 1 || vb.rank() != 1)
    fail(ErrorCode::dimension, "concat_vec: expected two vectors, got " + shape_str(va.shape()) +
                                   " and " + shape_str(vb.shape()));
  const std::size_t p = va.size(), q = vb.size();
  std::vector<double> out;
  out.reserve(p + q);
  out.insert(out.end(), va.values().begin(), va.values().end());
  out.insert(out.end(), vb.values().begin(), vb.values().end());
  return emit(Tensor({p + q}, std::move(out)), {a, b}, [a, b, p, q](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    if (g.wants(a)) {
      auto& ga = g.grad_buf(a);
      for (std::size_t i = 0; i < p; ++i) ga[i] += go[i];
    }
    if (g.wants(b)) {
      auto& gb = g.grad_buf(b);
      for (std::size_t i = 0; i < q; ++i) gb[i] += go[p + i];
    }
  });
}

NodeId Graph::stack_rows(const std::vector<NodeId>& rows) {
  if (rows.empty()) fail(ErrorCode::invalid_argument, "stack_rows: no rows given");
  const std::size_t d = value(rows[0]).size();
  for (NodeId r : rows) {
    const Tensor& vr = value(r);
    if (vr.rank() > 2 || (vr.rank() == 2 && vr.shape()[0] != 1) || vr.size() != d)
      fail(ErrorCode::dimension, "stack_rows: rows must be equal-length vectors, got " +
                                     shape_str(vr.shape()));
  }
  const std::size_t t = rows.size();
  std::vector<double> out;
  out.reserve(t * d);
  for (NodeId r : rows) {
    const auto& v = value(r).values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return emit(Tensor({t, d}, std::move(out)), rows, [rows, d](Graph& g, NodeId o) {
    const auto& go = g.out_grad(o);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!g.wants(rows[i])) continue;
      auto& gr = g.grad_buf(rows[i]);
      for (std::size_t j = 0; j < d; ++j) gr[j] += go[i * d + j];
    }
  });
}

NodeId Graph::tanh(NodeId a) {
  const Tensor& va = value(a);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
  return emit(Tensor(va.shape(), std::move(out)), {a}, [a](Graph& g, NodeId o) {
    if (!g.wants(a)) return;
    const auto& go = g.out_grad(o);
    const Tensor& y = g.value(o);
    auto& ga = g.grad_buf(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - y[i] * y[i]);
  });
}

NodeId Graph::sigmoid(NodeId a) {
  const Tensor& va = value(a);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = va[i];
    if (x >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return emit(Tensor(va.shape(), std::move(out)), {a}, [a](Graph& g, NodeId o) {
    if (!g.wants(a)) return;
    const auto& go = g.out_grad(o);
    const Tensor& y = g.value(o);
    auto& ga = g.grad_buf(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

namespace {

void check_mask(std::size_t n, const Mask& mask) {
  if (!mask.empty() && mask.size() != n)
    fail(ErrorCode::dimension, "mask length " + std::to_string(mask.size()) +
                                   " does not match logits length " + std::to_string(n));
  if (!mask.empty()) {
    bool any = false;
    for (char m : mask) any = any || (m != 0);
    if (!any) fail(ErrorCode::invalid_argument, "masked_softmax: all positions are masked");
  }
}

}  // namespace

std::vector<double> softmax_values(const std::vector<double>& logits, const Mask& mask) {
  check_mask(logits.size(), mask);
  auto live = [&](std::size_t i) { return mask.empty() || mask[i]; };
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (live(i)) mx = std::max(mx, logits[i]);
  std::vector<double> p(logits.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (live(i)) {
      p[i] = std::exp(logits[i] - mx);
      s += p[i];
    }
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (live(i)) p[i] /= s;
  return p;
}

NodeId Graph::masked_softmax(NodeId logits, const Mask& mask) {
  const Tensor& vl = value(logits);
  if (vl.rank() != 1)
    fail(ErrorCode::dimension,
         "masked_softmax: expected a vector, got shape " + shape_str(vl.shape()));
  std::vector<double> p = softmax_values(vl.values(), mask);
  Mask m = mask;
  return emit(Tensor(vl.shape(), std::move(p)), {logits},
              [logits, m = std::move(m)](Graph& g, NodeId o) {
                if (!g.wants(logits)) return;
                const auto& go = g.out_grad(o);
                const Tensor& y = g.value(o);
                auto live = [&](std::size_t i) { return m.empty() || m[i]; };
                double dot = 0.0;
                for (std::size_t i = 0; i < go.size(); ++i)
                  if (live(i)) dot += go[i] * y[i];
                auto& gl = g.grad_buf(logits);
                for (std::size_t i = 0; i < go.size(); ++i)
                  if (live(i)) gl[i] += y[i] * (go[i] - dot);
              });
}

NodeId Graph::gather(NodeId t, std::vector<std::size_t> indices, GatherAxis axis) {
  const Tensor& vt = value(t);
  if (vt.rank() == 1 && axis == GatherAxis::cols)
    fail(ErrorCode::dimension, "gather: cannot gather columns of a vector");
  const bool vec = vt.rank() == 1;
  const std::size_t rows = vt.shape()[0];
  const std::size_t cols = vec ? 1 : vt.shape()[1];
  const std::size_t limit = (axis == GatherAxis::rows) ? rows : cols;
  for (std::size_t idx : indices)
    if (idx >= limit)
      fail(ErrorCode::index, "gather: index " + std::to_string(idx) + " out of range [0, " +
                                 std::to_string(limit) + ")");
  const std::size_t k = indices.size();

  std::vector<double> out;
  Shape out_shape;
  if (axis == GatherAxis::rows) {
    out.resize(k * cols);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = vt[indices[i] * cols + j];
    out_shape = vec ? Shape{k} : Shape{k, cols};
  } else {
    out.resize(rows * k);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < k; ++j) out[i * k + j] = vt[i * cols + indices[j]];
    out_shape = Shape{rows, k};
  }

  return emit(Tensor(std::move(out_shape), std::move(out)), {t},
              [t, idx = std::move(indices), axis, rows, cols](Graph& g, NodeId o) {
                if (!g.wants(t)) return;
                const auto& go = g.out_grad(o);
                auto& gt = g.grad_buf(t);
                const std::size_t k = idx.size();
                if (axis == GatherAxis::rows) {
                  for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < cols; ++j)
                      gt[idx[i] * cols + j] += go[i * cols + j];
                } else {
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < k; ++j) gt[i * cols + idx[j]] += go[i * k + j];
                }
              });
}

NodeId Graph::reshape(NodeId t, Shape shape) {
  const Tensor& vt = value(t);
  if (shape_size(shape) != vt.size())
    fail(ErrorCode::dimension, "reshape: size mismatch, " + shape_str(vt.shape()) + " to " +
                                   shape_str(shape));
  return emit(Tensor(std::move(shape), vt.values()), {t}, [t](Graph& g, NodeId o) {
    if (!g.wants(t)) return;
    const auto& go = g.out_grad(o);
    auto& gt = g.grad_buf(t);
    for (std::size_t i = 0; i < go.size(); ++i) gt[i] += go[i];
  });
}

NodeId Graph::sum(NodeId t) {
  const Tensor& vt = value(t);
  double s = 0.0;
  for (double v : vt.values()) s += v;
  return emit(Tensor::scalar(s), {t}, [t](Graph& g, NodeId o) {
    if (!g.wants(t)) return;
    const double go = g.out_grad(o)[0];
    auto& gt = g.grad_buf(t);
    for (double& v : gt) v += go;
  });
}

NodeId Graph::pick(NodeId t, std::size_t flat_index) {
  const Tensor& vt = value(t);
  if (flat_index >= vt.size())
    fail(ErrorCode::index, "pick: index " + std::to_string(flat_index) + " out of range [0, " +
                               std::to_string(vt.size()) + ")");
  return emit(Tensor::scalar(vt[flat_index]), {t}, [t, flat_index](Graph& g, NodeId o) {
    if (!g.wants(t)) return;
    g.grad_buf(t)[flat_index] += g.out_grad(o)[0];
  });
}

NodeId Graph::neg_log(NodeId t, double floor) {
  const Tensor& vt = value(t);
  if (vt.size() != 1)
    fail(ErrorCode::invalid_argument,
         "neg_log: expected a scalar, got shape " + shape_str(vt.shape()));
  const double x = vt[0];
  const bool clamped = !(x >= floor);
  if (clamped) ++clamp_events_;
  const double val = -std::log(clamped ? floor : x);
  const double dx = clamped ? 0.0 : -1.0 / x;
  return emit(Tensor::scalar(val), {t}, [t, dx](Graph& g, NodeId o) {
    if (!g.wants(t)) return;
    g.grad_buf(t)[0] += g.out_grad(o)[0] * dx;
  });
}

}  // namespace mapspan
