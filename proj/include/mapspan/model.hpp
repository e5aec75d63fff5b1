#pragma once

#include <map>
#include <string>
#include <vector>

#include "mapspan/data.hpp"
#include "mapspan/encoder.hpp"
#include "mapspan/inference.hpp"
#include "mapspan/metrics.hpp"
#include "mapspan/trainer.hpp"

namespace mapspan {

enum class Strategy { ind, vcp, map_forward, map_ensemble };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy strategy);

struct ModelConfig {
  EncoderConfig encoder;  // vocab_size is filled in when the model is built
  HeadKind head = HeadKind::map;
  DirectionsMode directions = DirectionsMode::forward;
  std::size_t l = 0;  // attention width; 0 means "use d"
  std::uint64_t seed = 1;

  std::size_t attention_l() const { return l == 0 ? encoder.d : l; }
};

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  ParameterSet params;
};

// Vocabulary from the training data plus freshly initialized encoder and
// head parameters.
Model build_model(ModelConfig cfg, const std::vector<QAExample>& train_data);

TrainExample to_train_example(const QAExample& ex, const Vocabulary& vocab);
std::vector<TrainExample> to_train_examples(const std::vector<QAExample>& data,
                                            const Vocabulary& vocab);

// Runs the training loop with head and directions taken from the model.
TrainResult train_model(Model& model, const std::vector<QAExample>& train_data,
                        TrainConfig cfg, const TrainHooks& hooks = {});

SpanPrediction predict(const Model& model, const QAExample& ex, Strategy strategy,
                       const SearchConfig& cfg);

// One prediction text per example, computed in parallel.
std::map<std::string, std::string> predict_texts(const Model& model,
                                                 const std::vector<QAExample>& data,
                                                 Strategy strategy, const SearchConfig& cfg);

EvalReport evaluate_model(const Model& model, const std::vector<QAExample>& data,
                          Strategy strategy, const SearchConfig& cfg, std::size_t bin_cap = 10);

// Checkpoint: one JSON header line, then the parameter values as raw
// little-endian 64-bit floats in declaration order.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// The checkpoint header's config object, as JSON text.
std::string describe_config(const ModelConfig& cfg);

}  // namespace mapspan
