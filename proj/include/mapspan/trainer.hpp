#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mapspan/encoder.hpp"
#include "mapspan/heads.hpp"

namespace mapspan {

// How the retained sampled logits are turned into probabilities: one softmax
// over all k*k cells, or one per sampled row.
enum class NormMode { joint_flat, row_wise };
enum class DirectionsMode { forward, backward, both };

NormMode norm_mode_from_string(const std::string& s);
DirectionsMode directions_from_string(const std::string& s);
std::string to_string(NormMode mode);
std::string to_string(DirectionsMode dirs);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  HeadKind head = HeadKind::map;
  std::size_t sample_k = 20;
  bool full_matrix = false;  // conditional loss over the whole truth row instead of sampling
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t epochs = 3;
  NormMode norm_mode = NormMode::joint_flat;
  DirectionsMode directions = DirectionsMode::forward;
  bool shared_cols = false;  // one column set for every row, drawn from the truth row
  std::uint64_t seed = 1;
  std::size_t max_sequence = 256;  // full-matrix guard
  double log_floor = 1e-30;

  void validate() const;
};

// Top-(k-1) positions by probability with the truth position merged in:
// distinct, truth exactly once, min(k, n) members, ascending. Ties prefer
// the lower index.
std::vector<std::size_t> sample_indices(const std::vector<double>& p, std::size_t truth,
                                        std::size_t sample_k);
std::vector<std::size_t> sample_indices(const ProbVector& p, std::size_t truth,
                                        std::size_t sample_k);

struct SampledMatrix {
  std::vector<std::size_t> row_indices;               // global rows, ascending
  std::vector<std::vector<std::size_t>> col_indices;  // global columns per row, ascending
  std::vector<double> logits;                         // rows x cols, row-major
  std::vector<double> probs;                          // normalized per norm_mode
  std::size_t rows = 0, cols = 0;
  std::size_t truth_row = 0, truth_col = 0;  // local coordinates of the truth cell
  NormMode norm_mode = NormMode::joint_flat;

  std::size_t cell_count() const { return rows * cols; }
  void check() const;  // enforces the structural and normalization invariants
};

// Sampled conditional slice for one example: rows from p_first around
// truth_first, columns per row from that row's provisional distribution
// around truth_second.
SampledMatrix build_sampled_matrix(const EncoderOutput& enc, const ParameterSet& params,
                                   Direction dir, const ProbVector& p_first,
                                   std::size_t truth_first, std::size_t truth_second,
                                   const TrainConfig& cfg);

double loss_start(const ProbVector& p_first, std::size_t truth, bool* clamped = nullptr);
double loss_end_sampled(const SampledMatrix& sm, bool* clamped = nullptr);
double total_loss(double loss_s, double loss_e);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t t = 0;
};

void adam_step(ParameterSet& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainExample {
  std::vector<TokenId> question;
  std::vector<TokenId> passage;
  std::size_t span_s = 0, span_e = 0;
};

struct StepLog {
  std::size_t step = 0, epoch = 0;
  double loss_s = 0.0, loss_e = 0.0, loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainHooks {
  // Called after each epoch; returning true stops training early.
  std::function<bool(std::size_t epoch)> after_epoch;
};

struct TrainResult {
  std::vector<StepLog> log;
  std::size_t clamp_events = 0;
};

// Builds the scalar training loss for one example on the given graph; used
// by the training loop and by gradient checking. Mean component values are
// written to loss_s/loss_e when given.
NodeId example_loss_node(Graph& g, const Bound& b, const TrainExample& ex,
                         const EncoderConfig& enc_cfg, const TrainConfig& cfg,
                         double* loss_s = nullptr, double* loss_e = nullptr);

// Batched epochs over shuffled data with one optimizer step per batch;
// per-example gradients are reduced in example order, so the run is
// reproducible for a fixed seed at any worker count.
TrainResult train(ParameterSet& params, const EncoderConfig& enc_cfg,
                  const std::vector<TrainExample>& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

struct ProbeReport {
  double truth_before = 0.0, truth_after = 0.0;
  std::size_t decreased = 0;  // sampled non-truth cells whose probability fell
  std::size_t others = 0;     // sampled non-truth cells in total
  double max_unsampled_grad = 0.0;

  bool pass() const {
    return truth_after > truth_before && decreased == others && max_unsampled_grad == 0.0;
  }
};

// One explicit descent step on raw logits under the sampled joint-flat
// cross-entropy: the truth probability must rise, every other sampled
// probability fall, and unsampled logits receive exactly zero gradient.
ProbeReport gradient_direction_probe(const Tensor& logits, const std::vector<std::size_t>& rows,
                                     const std::vector<std::vector<std::size_t>>& cols,
                                     std::size_t truth_row, std::size_t truth_col,
                                     double eta = 0.1);
ProbeReport gradient_direction_probe(const Tensor& logits, std::size_t truth_row,
                                     std::size_t truth_col, double eta = 0.1);

}  // namespace mapspan
