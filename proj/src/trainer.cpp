#include "mapspan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mapspan/parallel.hpp"

namespace mapspan {

NormMode norm_mode_from_string(const std::string& s) {
  if (s == "joint-flat") return NormMode::joint_flat;
  if (s == "row-wise") return NormMode::row_wise;
  fail(ErrorCode::config, "unknown norm mode: " + s);
}

DirectionsMode directions_from_string(const std::string& s) {
  if (s == "forward") return DirectionsMode::forward;
  if (s == "backward") return DirectionsMode::backward;
  if (s == "both") return DirectionsMode::both;
  fail(ErrorCode::config, "unknown directions mode: " + s);
}

std::string to_string(NormMode mode) {
  return mode == NormMode::joint_flat ? "joint-flat" : "row-wise";
}

std::string to_string(DirectionsMode dirs) {
  switch (dirs) {
    case DirectionsMode::forward: return "forward";
    case DirectionsMode::backward: return "backward";
    default: return "both";
  }
}

void TrainConfig::validate() const {
  if (sample_k < 1) fail(ErrorCode::config, "sample_k must be at least 1");
  if (!(adam.lr > 0)) fail(ErrorCode::config, "learning rate must be positive");
  if (batch_size < 1) fail(ErrorCode::config, "batch_size must be at least 1");
  if (epochs < 1) fail(ErrorCode::config, "epochs must be at least 1");
  if (!(log_floor > 0)) fail(ErrorCode::config, "log floor must be positive");
}

std::vector<std::size_t> sample_indices(const std::vector<double>& p, std::size_t truth,
                                        std::size_t sample_k) {
  const std::size_t n = p.size();
  if (truth >= n)
    fail(ErrorCode::index, "truth position " + std::to_string(truth) + " out of range [0, " +
                               std::to_string(n) + ")");
  if (sample_k < 1) fail(ErrorCode::invalid_argument, "sample_k must be at least 1");

  std::vector<std::size_t> others;
  others.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (i != truth) others.push_back(i);
  std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return a < b;
  });

  const std::size_t take = std::min(sample_k, n) - 1;
  std::vector<std::size_t> out(others.begin(), others.begin() + take);
  out.push_back(truth);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> sample_indices(const ProbVector& p, std::size_t truth,
                                        std::size_t sample_k) {
  if (p.mask.empty()) return sample_indices(p.probs, truth, sample_k);
  if (truth >= p.size() || !p.mask[truth])
    fail(ErrorCode::index, "truth position " + std::to_string(truth) + " is masked");

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.mask[i] && i != truth) valid.push_back(i);
  std::sort(valid.begin(), valid.end(), [&](std::size_t a, std::size_t b) {
    if (p.probs[a] != p.probs[b]) return p.probs[a] > p.probs[b];
    return a < b;
  });
  const std::size_t take = std::min(sample_k, valid.size() + 1) - 1;
  std::vector<std::size_t> out(valid.begin(), valid.begin() + take);
  out.push_back(truth);
  std::sort(out.begin(), out.end());
  return out;
}

void SampledMatrix::check() const {
  if (row_indices.size() != rows || col_indices.size() != rows)
    fail(ErrorCode::dimension, "sampled matrix: row bookkeeping out of shape");
  if (logits.size() != rows * cols || probs.size() != rows * cols)
    fail(ErrorCode::dimension, "sampled matrix: cell buffers out of shape");
  for (std::size_t r = 1; r < rows; ++r)
    if (row_indices[r] <= row_indices[r - 1])
      fail(ErrorCode::invalid_argument, "sampled matrix: rows not strictly ascending");
  for (const auto& cs : col_indices) {
    if (cs.size() != cols)
      fail(ErrorCode::dimension, "sampled matrix: ragged column sets");
    for (std::size_t c = 1; c < cols; ++c)
      if (cs[c] <= cs[c - 1])
        fail(ErrorCode::invalid_argument, "sampled matrix: columns not strictly ascending");
  }
  if (truth_row >= rows || truth_col >= cols)
    fail(ErrorCode::index, "sampled matrix: truth cell outside the slice");

  if (norm_mode == NormMode::joint_flat) {
    double sum = 0.0;
    for (double v : probs) sum += v;
    if (std::abs(sum - 1.0) > 1e-9)
      fail(ErrorCode::numeric, "sampled cells sum to " + std::to_string(sum));
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) sum += probs[r * cols + c];
      if (std::abs(sum - 1.0) > 1e-9)
        fail(ErrorCode::numeric, "sampled row " + std::to_string(r) + " sums to " +
                                     std::to_string(sum));
    }
  }
}

SampledMatrix build_sampled_matrix(const EncoderOutput& enc, const ParameterSet& params,
                                   Direction dir, const ProbVector& p_first,
                                   std::size_t truth_first, std::size_t truth_second,
                                   const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = enc.H.shape()[0];
  if (truth_first >= n || truth_second >= n)
    fail(ErrorCode::index, "truth span out of range");

  SampledMatrix sm;
  sm.norm_mode = cfg.norm_mode;
  sm.row_indices = sample_indices(p_first, truth_first, cfg.sample_k);
  sm.rows = sm.row_indices.size();

  std::vector<std::size_t> shared;
  if (cfg.shared_cols) {
    const std::vector<double> provisional =
        softmax_values(map_row_logits(enc.H, truth_first, params, dir));
    shared = sample_indices(provisional, truth_second, cfg.sample_k);
  }

  sm.col_indices.reserve(sm.rows);
  std::vector<std::vector<double>> cell_logits(sm.rows);
  for (std::size_t r = 0; r < sm.rows; ++r) {
    const std::vector<double> full = map_row_logits(enc.H, sm.row_indices[r], params, dir);
    std::vector<std::size_t> cs =
        cfg.shared_cols ? shared : sample_indices(softmax_values(full), truth_second,
                                                  cfg.sample_k);
    cell_logits[r].reserve(cs.size());
    for (std::size_t c : cs) cell_logits[r].push_back(full[c]);
    sm.col_indices.push_back(std::move(cs));
  }
  sm.cols = sm.col_indices.front().size();

  sm.logits.reserve(sm.rows * sm.cols);
  for (const auto& row : cell_logits)
    sm.logits.insert(sm.logits.end(), row.begin(), row.end());

  if (cfg.norm_mode == NormMode::joint_flat) {
    sm.probs = softmax_values(sm.logits);
  } else {
    sm.probs.reserve(sm.logits.size());
    for (std::size_t r = 0; r < sm.rows; ++r) {
      std::vector<double> row(sm.logits.begin() + r * sm.cols,
                              sm.logits.begin() + (r + 1) * sm.cols);
      std::vector<double> p = softmax_values(row);
      sm.probs.insert(sm.probs.end(), p.begin(), p.end());
    }
  }

  const auto row_at = std::find(sm.row_indices.begin(), sm.row_indices.end(), truth_first);
  sm.truth_row = static_cast<std::size_t>(row_at - sm.row_indices.begin());
  const auto& truth_cols = sm.col_indices[sm.truth_row];
  const auto col_at = std::find(truth_cols.begin(), truth_cols.end(), truth_second);
  sm.truth_col = static_cast<std::size_t>(col_at - truth_cols.begin());

  sm.check();
  return sm;
}

namespace {

double clamped_neg_log(double p, double floor, bool* clamped) {
  const bool hit = !(p >= floor);
  if (clamped) *clamped = hit;
  return -std::log(hit ? floor : p);
}

}  // namespace

double loss_start(const ProbVector& p_first, std::size_t truth, bool* clamped) {
  if (truth >= p_first.size())
    fail(ErrorCode::index, "truth position out of range");
  if (!p_first.mask.empty() && !p_first.mask[truth])
    fail(ErrorCode::index, "truth position is masked");
  return clamped_neg_log(p_first[truth], 1e-30, clamped);
}

double loss_end_sampled(const SampledMatrix& sm, bool* clamped) {
  return clamped_neg_log(sm.probs[sm.truth_row * sm.cols + sm.truth_col], 1e-30, clamped);
}

double total_loss(double loss_s, double loss_e) { return (loss_s + loss_e) / 2.0; }

void adam_step(ParameterSet& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (grads.size() != params.count())
    fail(ErrorCode::dimension, "adam_step: gradient list does not match parameters");
  if (state.m.empty()) {
    state.m.resize(params.count());
    state.v.resize(params.count());
    for (std::size_t p = 0; p < params.count(); ++p) {
      state.m[p].assign(params.tensor(p).size(), 0.0);
      state.v[p].assign(params.tensor(p).size(), 0.0);
    }
  }
  for (std::size_t p = 0; p < params.count(); ++p)
    if (!grads[p].all_finite())
      fail(ErrorCode::training, "non-finite gradient for parameter " + params.name(p));

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (std::size_t p = 0; p < params.count(); ++p) {
    Tensor& theta = params.tensor(p);
    const Tensor& g = grads[p];
    if (g.size() != theta.size())
      fail(ErrorCode::dimension, "adam_step: gradient shape mismatch for " + params.name(p));
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

namespace {

struct DirLoss {
  NodeId total;
  double loss_first;
  double loss_second;
};

DirLoss map_direction_loss(Graph& g, const Bound& b, NodeId H, const TrainExample& ex,
                           Direction dir, const TrainConfig& cfg) {
  const std::size_t n = g.value(H).shape()[0];
  const std::size_t truth_first = dir == Direction::forward ? ex.span_s : ex.span_e;
  const std::size_t truth_second = dir == Direction::forward ? ex.span_e : ex.span_s;
  if (ex.span_s > ex.span_e || ex.span_e >= n)
    fail(ErrorCode::index, "gold span out of range for the passage");

  NodeId p_first = map_first_node(g, H, b, dir);
  NodeId l_first = g.neg_log(g.pick(p_first, truth_first), cfg.log_floor);

  NodeId l_second;
  if (cfg.full_matrix) {
    if (n > cfg.max_sequence)
      fail(ErrorCode::resource, "passage length " + std::to_string(n) +
                                    " exceeds the full-matrix cap of " +
                                    std::to_string(cfg.max_sequence) + "; use sampled training");
    NodeId probs = g.masked_softmax(map_row_logits_node(g, H, truth_first, b, dir));
    l_second = g.neg_log(g.pick(probs, truth_second), cfg.log_floor);
  } else {
    const std::vector<std::size_t> rows =
        sample_indices(g.value(p_first).values(), truth_first, cfg.sample_k);

    // Column selection runs on values only; gradients flow solely through
    // the retained cells, whose logits repeat the full row's arithmetic.
    const Tensor H_val = g.value(H);
    std::vector<std::size_t> shared;
    if (cfg.shared_cols) {
      const std::vector<double> provisional =
          softmax_values(map_row_logits(H_val, truth_first, *b.set, dir));
      shared = sample_indices(provisional, truth_second, cfg.sample_k);
    }
    std::vector<std::vector<std::size_t>> cols(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (cfg.shared_cols) {
        cols[r] = shared;
      } else {
        const std::vector<double> provisional =
            softmax_values(map_row_logits(H_val, rows[r], *b.set, dir));
        cols[r] = sample_indices(provisional, truth_second, cfg.sample_k);
      }
    }

    std::size_t truth_row = std::find(rows.begin(), rows.end(), truth_first) - rows.begin();
    std::size_t truth_col =
        std::find(cols[truth_row].begin(), cols[truth_row].end(), truth_second) -
        cols[truth_row].begin();
    const std::size_t kc = cols.front().size();

    if (cfg.norm_mode == NormMode::joint_flat) {
      std::vector<NodeId> row_logits(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        row_logits[r] = map_row_logits_node(g, H, rows[r], b, dir, cols[r]);
      NodeId flat = g.reshape(g.stack_rows(row_logits), {rows.size() * kc});
      NodeId probs = g.masked_softmax(flat);
      l_second = g.neg_log(g.pick(probs, truth_row * kc + truth_col), cfg.log_floor);
    } else {
      // Row-wise: only the truth row's softmax reaches the loss; the other
      // rows would not receive gradient under the one-hot target.
      NodeId logits = map_row_logits_node(g, H, truth_first, b, dir, cols[truth_row]);
      NodeId probs = g.masked_softmax(logits);
      l_second = g.neg_log(g.pick(probs, truth_col), cfg.log_floor);
    }
  }

  return DirLoss{g.scale(g.add(l_first, l_second), 0.5), g.value(l_first)[0],
                 g.value(l_second)[0]};
}

}  // namespace

NodeId example_loss_node(Graph& g, const Bound& b, const TrainExample& ex,
                         const EncoderConfig& enc_cfg, const TrainConfig& cfg,
                         double* loss_s, double* loss_e) {
  EncoderNodes enc = encode_nodes(g, ex.question, ex.passage, b, enc_cfg);
  const std::size_t n = g.value(enc.H).shape()[0];
  if (ex.span_s > ex.span_e || ex.span_e >= n)
    fail(ErrorCode::index, "gold span out of range for the passage");

  if (cfg.head == HeadKind::ind || cfg.head == HeadKind::vcp) {
    PairNodes pair = cfg.head == HeadKind::ind ? ind_nodes(g, enc.H, b)
                                               : vcp_nodes(g, enc.H, enc.H_Q, b);
    NodeId l_s = g.neg_log(g.pick(pair.p_s, ex.span_s), cfg.log_floor);
    NodeId l_e = g.neg_log(g.pick(pair.p_e, ex.span_e), cfg.log_floor);
    if (loss_s) *loss_s = g.value(l_s)[0];
    if (loss_e) *loss_e = g.value(l_e)[0];
    return g.scale(g.add(l_s, l_e), 0.5);
  }

  std::vector<Direction> dirs;
  if (cfg.directions != DirectionsMode::backward) dirs.push_back(Direction::forward);
  if (cfg.directions != DirectionsMode::forward) dirs.push_back(Direction::backward);

  std::vector<DirLoss> losses;
  losses.reserve(dirs.size());
  for (Direction d : dirs) losses.push_back(map_direction_loss(g, b, enc.H, ex, d, cfg));

  double mean_first = 0.0, mean_second = 0.0;
  for (const auto& l : losses) {
    mean_first += l.loss_first / double(losses.size());
    mean_second += l.loss_second / double(losses.size());
  }
  if (loss_s) *loss_s = mean_first;
  if (loss_e) *loss_e = mean_second;

  if (losses.size() == 1) return losses.front().total;
  return g.scale(g.add(losses[0].total, losses[1].total), 0.5);
}

TrainResult train(ParameterSet& params, const EncoderConfig& enc_cfg,
                  const std::vector<TrainExample>& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  enc_cfg.validate();
  if (data.empty()) fail(ErrorCode::invalid_argument, "train: no examples");

  Rng order_rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  AdamState state;
  TrainResult result;
  std::size_t step = 0;

  struct Slot {
    std::vector<Tensor> grads;
    double loss_s = 0.0, loss_e = 0.0, loss = 0.0;
    std::size_t clamps = 0;
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<Slot> slots(count);

      parallel_for(count, [&](std::size_t i) {
        const TrainExample& ex = data[order[start + i]];
        Graph g;
        Bound b = Bound::bind(g, params);
        Slot& slot = slots[i];
        NodeId root = example_loss_node(g, b, ex, enc_cfg, cfg, &slot.loss_s, &slot.loss_e);
        slot.loss = g.value(root)[0];
        g.backward(root);
        slot.clamps = g.clamp_events();
        slot.grads.reserve(params.count());
        for (std::size_t p = 0; p < params.count(); ++p)
          slot.grads.push_back(g.grad_tensor(b.ids[p]));
      });

      std::vector<Tensor> mean_grads;
      mean_grads.reserve(params.count());
      for (std::size_t p = 0; p < params.count(); ++p)
        mean_grads.push_back(Tensor::zeros(params.tensor(p).shape()));
      double sum_s = 0.0, sum_e = 0.0, sum_total = 0.0;
      for (const Slot& slot : slots) {
        for (std::size_t p = 0; p < params.count(); ++p)
          for (std::size_t i = 0; i < mean_grads[p].size(); ++i)
            mean_grads[p][i] += slot.grads[p][i];
        sum_s += slot.loss_s;
        sum_e += slot.loss_e;
        sum_total += slot.loss;
        result.clamp_events += slot.clamps;
      }
      for (auto& gt : mean_grads)
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] /= double(count);

      adam_step(params, mean_grads, state, cfg.adam);
      ++step;

      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      result.log.push_back(StepLog{step, epoch, sum_s / double(count), sum_e / double(count),
                                   sum_total / double(count), wall_ms});
    }
    if (hooks.after_epoch && hooks.after_epoch(epoch)) break;
  }
  return result;
}

ProbeReport gradient_direction_probe(const Tensor& logits, const std::vector<std::size_t>& rows,
                                     const std::vector<std::vector<std::size_t>>& cols,
                                     std::size_t truth_row, std::size_t truth_col, double eta) {
  if (logits.rank() != 2 || logits.shape()[0] != logits.shape()[1])
    fail(ErrorCode::dimension, "probe expects a square logit matrix");
  if (rows.empty() || cols.size() != rows.size())
    fail(ErrorCode::invalid_argument, "probe: rows and column sets must align");
  const std::size_t n = logits.shape()[0];
  const std::size_t kc = cols.front().size();

  std::size_t local_row = rows.size(), local_col = kc;
  std::vector<std::size_t> flat_cells;
  flat_cells.reserve(rows.size() * kc);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (cols[r].size() != kc) fail(ErrorCode::invalid_argument, "probe: ragged column sets");
    for (std::size_t c = 0; c < kc; ++c) {
      if (rows[r] >= n || cols[r][c] >= n) fail(ErrorCode::index, "probe: cell out of range");
      flat_cells.push_back(rows[r] * n + cols[r][c]);
      if (rows[r] == truth_row && cols[r][c] == truth_col) {
        local_row = r;
        local_col = c;
      }
    }
  }
  if (local_row == rows.size())
    fail(ErrorCode::invalid_argument, "probe: truth cell not among the sampled cells");

  Graph g;
  Tensor tracked = logits;
  tracked.set_requires_grad(true);
  NodeId L = g.input(std::move(tracked));
  NodeId flat = g.gather(g.reshape(L, {n * n}), flat_cells, GatherAxis::rows);
  NodeId probs = g.masked_softmax(flat);
  NodeId loss = g.neg_log(g.pick(probs, local_row * kc + local_col));
  g.backward(loss);

  const Tensor grad = g.grad_tensor(L);
  Tensor updated = logits;
  for (std::size_t i = 0; i < updated.size(); ++i) updated[i] -= eta * grad[i];

  std::vector<double> before_logits, after_logits;
  before_logits.reserve(flat_cells.size());
  for (std::size_t cell : flat_cells) {
    before_logits.push_back(logits[cell]);
    after_logits.push_back(updated[cell]);
  }
  const std::vector<double> before = softmax_values(before_logits);
  const std::vector<double> after = softmax_values(after_logits);

  ProbeReport report;
  const std::size_t truth_flat = local_row * kc + local_col;
  report.truth_before = before[truth_flat];
  report.truth_after = after[truth_flat];
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (i == truth_flat) continue;
    ++report.others;
    if (after[i] < before[i]) ++report.decreased;
  }

  std::vector<char> sampled(n * n, 0);
  for (std::size_t cell : flat_cells) sampled[cell] = 1;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!sampled[i]) report.max_unsampled_grad = std::max(report.max_unsampled_grad,
                                                          std::abs(grad[i]));
  return report;
}

ProbeReport gradient_direction_probe(const Tensor& logits, std::size_t truth_row,
                                     std::size_t truth_col, double eta) {
  if (logits.rank() != 2) fail(ErrorCode::dimension, "probe expects a matrix");
  const std::size_t n = logits.shape()[0];
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<std::vector<std::size_t>> cols(n, rows);
  return gradient_direction_probe(logits, rows, cols, truth_row, truth_col, eta);
}

}  // namespace mapspan
