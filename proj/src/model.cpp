#include "mapspan/model.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"
#include "mapspan/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace mapspan {

Strategy strategy_from_string(const std::string& s) {
  if (s == "ind") return Strategy::ind;
  if (s == "vcp") return Strategy::vcp;
  if (s == "map-forward") return Strategy::map_forward;
  if (s == "map-ensemble") return Strategy::map_ensemble;
  fail(ErrorCode::config, "unknown strategy: " + s);
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::ind: return "ind";
    case Strategy::vcp: return "vcp";
    case Strategy::map_forward: return "map-forward";
    default: return "map-ensemble";
  }
}

Model build_model(ModelConfig cfg, const std::vector<QAExample>& train_data) {
  Model model;
  for (const auto& ex : train_data) {
    for (const auto& t : ex.passage_tokens) model.vocab.add(t);
    for (const auto& t : ex.question_tokens) model.vocab.add(t);
  }
  cfg.encoder.vocab_size = model.vocab.size();
  cfg.encoder.validate();
  model.config = cfg;

  Rng rng(cfg.seed);
  init_encoder(model.params, cfg.encoder, rng);
  const std::size_t d = cfg.encoder.d;
  const std::size_t l = cfg.attention_l();
  switch (cfg.head) {
    case HeadKind::ind:
      init_ind_params(model.params, d, rng);
      break;
    case HeadKind::vcp:
      init_vcp_params(model.params, d, l, rng);
      break;
    case HeadKind::map:
      if (cfg.directions != DirectionsMode::backward)
        init_map_params(model.params, d, l, Direction::forward, rng);
      if (cfg.directions != DirectionsMode::forward)
        init_map_params(model.params, d, l, Direction::backward, rng);
      break;
  }
  return model;
}

TrainExample to_train_example(const QAExample& ex, const Vocabulary& vocab) {
  if (ex.gold_spans.empty())
    fail(ErrorCode::invalid_argument, "example " + ex.id + " has no gold span");
  TrainExample out;
  out.question = vocab.ids_of(ex.question_tokens);
  out.passage = vocab.ids_of(ex.passage_tokens);
  out.span_s = ex.gold_spans.front().start;
  out.span_e = ex.gold_spans.front().end;
  return out;
}

std::vector<TrainExample> to_train_examples(const std::vector<QAExample>& data,
                                            const Vocabulary& vocab) {
  std::vector<TrainExample> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(to_train_example(ex, vocab));
  return out;
}

TrainResult train_model(Model& model, const std::vector<QAExample>& train_data, TrainConfig cfg,
                        const TrainHooks& hooks) {
  cfg.head = model.config.head;
  cfg.directions = model.config.directions;
  return train(model.params, model.config.encoder,
               to_train_examples(train_data, model.vocab), cfg, hooks);
}

namespace {

void require_map_directions(const Model& model, Strategy strategy) {
  if (model.config.head != HeadKind::map)
    fail(ErrorCode::config, "strategy " + to_string(strategy) +
                                " needs a conditional-matrix model, got head " +
                                to_string(model.config.head));
  const bool has_forward = model.config.directions != DirectionsMode::backward;
  const bool has_backward = model.config.directions != DirectionsMode::forward;
  if (strategy == Strategy::map_forward && !has_forward)
    fail(ErrorCode::config, "map-forward needs forward-direction parameters");
  if (strategy == Strategy::map_ensemble && !(has_forward && has_backward))
    fail(ErrorCode::config, "map-ensemble needs a both-direction checkpoint");
}

}  // namespace

SpanPrediction predict(const Model& model, const QAExample& ex, Strategy strategy,
                       const SearchConfig& cfg) {
  const EncoderOutput enc = encode(model.vocab.ids_of(ex.question_tokens),
                                   model.vocab.ids_of(ex.passage_tokens), model.params,
                                   model.config.encoder);
  switch (strategy) {
    case Strategy::ind: {
      if (model.config.head != HeadKind::ind)
        fail(ErrorCode::config, "strategy ind needs an ind-head model");
      auto [p_s, p_e] = ind_head(enc, model.params);
      return search_vector(p_s, p_e, cfg);
    }
    case Strategy::vcp: {
      if (model.config.head != HeadKind::vcp)
        fail(ErrorCode::config, "strategy vcp needs a vcp-head model");
      auto [p_s, p_e] = vcp_head(enc, model.params);
      return search_vector(p_s, p_e, cfg);
    }
    case Strategy::map_forward: {
      require_map_directions(model, strategy);
      ProbVector p_s = map_first(enc, model.params, Direction::forward);
      ProbMatrix P_e = map_full_matrix(enc, model.params, Direction::forward);
      return search_matrix(p_s, P_e, Direction::forward, cfg);
    }
    default: {
      require_map_directions(model, strategy);
      ProbVector p_s = map_first(enc, model.params, Direction::forward);
      ProbMatrix P_e = map_full_matrix(enc, model.params, Direction::forward);
      ProbVector p_e = map_first(enc, model.params, Direction::backward);
      ProbMatrix P_s = map_full_matrix(enc, model.params, Direction::backward);
      std::vector<SpanPrediction> F = top_k_pairs(p_s, P_e, Direction::forward, cfg);
      std::vector<SpanPrediction> B = top_k_pairs(p_e, P_s, Direction::backward, cfg);
      return ensemble(F, B);
    }
  }
}

std::map<std::string, std::string> predict_texts(const Model& model,
                                                 const std::vector<QAExample>& data,
                                                 Strategy strategy, const SearchConfig& cfg) {
  std::vector<std::string> texts(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const SpanPrediction sp = predict(model, data[i], strategy, cfg);
    texts[i] = prediction_text(data[i], sp.s, sp.e);
  });
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < data.size(); ++i) out[data[i].id] = std::move(texts[i]);
  return out;
}

EvalReport evaluate_model(const Model& model, const std::vector<QAExample>& data,
                          Strategy strategy, const SearchConfig& cfg, std::size_t bin_cap) {
  return evaluate(predict_texts(model, data, strategy, cfg), data, bin_cap);
}

namespace {

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"head", to_string(cfg.head)},
          {"directions", to_string(cfg.directions)},
          {"l", cfg.l},
          {"seed", cfg.seed},
          {"encoder",
           {{"d", cfg.encoder.d},
            {"embed", cfg.encoder.embed},
            {"vocab_size", cfg.encoder.vocab_size},
            {"kind", to_string(cfg.encoder.kind)}}}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.head = head_kind_from_string(j.at("head").get<std::string>());
  cfg.directions = directions_from_string(j.at("directions").get<std::string>());
  cfg.l = j.at("l").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto& e = j.at("encoder");
  cfg.encoder.d = e.at("d").get<std::size_t>();
  cfg.encoder.embed = e.at("embed").get<std::size_t>();
  cfg.encoder.vocab_size = e.at("vocab_size").get<std::size_t>();
  cfg.encoder.kind = encoder_kind_from_string(e.at("kind").get<std::string>());
  return cfg;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  nlohmann::json header;
  header["format"] = "mapspan-checkpoint";
  header["version"] = 1;
  header["config"] = config_to_json(model.config);
  nlohmann::json vocab = nlohmann::json::array();
  for (std::size_t i = 0; i < model.vocab.size(); ++i)
    vocab.push_back(model.vocab.token(static_cast<TokenId>(i)));
  header["vocab"] = std::move(vocab);
  nlohmann::json params = nlohmann::json::array();
  std::size_t total = 0;
  for (std::size_t p = 0; p < model.params.count(); ++p) {
    const Tensor& t = model.params.tensor(p);
    params.push_back({{"name", model.params.name(p)}, {"shape", t.shape()}});
    total += t.size();
  }
  header["params"] = std::move(params);
  header["binary_bytes"] = total * sizeof(double);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  out << header.dump() << '\n';
  for (std::size_t p = 0; p < model.params.count(); ++p) {
    const Tensor& t = model.params.tensor(p);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, path + ": missing checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }

  Model model;
  try {
    if (header.at("format").get<std::string>() != "mapspan-checkpoint")
      fail(ErrorCode::schema, path + ": not a checkpoint file");
    model.config = config_from_json(header.at("config"));
    const auto& vocab = header.at("vocab");
    if (vocab.size() < 3) fail(ErrorCode::schema, path + ": vocabulary too small");
    for (std::size_t i = 0; i < 3; ++i)
      if (vocab[i].get<std::string>() != model.vocab.token(static_cast<TokenId>(i)))
        fail(ErrorCode::schema, path + ": reserved vocabulary entries are off");
    for (std::size_t i = 3; i < vocab.size(); ++i)
      model.vocab.add(vocab[i].get<std::string>());
    if (model.vocab.size() != vocab.size())
      fail(ErrorCode::schema, path + ": vocabulary entries are not distinct");

    for (const auto& p : header.at("params")) {
      const Shape shape = p.at("shape").get<Shape>();
      model.params.add(p.at("name").get<std::string>(), Tensor::zeros(shape));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema, path + ": " + e.what());
  }

  std::size_t expected = 0;
  for (std::size_t p = 0; p < model.params.count(); ++p)
    expected += model.params.tensor(p).size();
  if (header.at("binary_bytes").get<std::size_t>() != expected * sizeof(double))
    fail(ErrorCode::schema, path + ": parameter payload size mismatch");

  for (std::size_t p = 0; p < model.params.count(); ++p) {
    Tensor& t = model.params.tensor(p);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) fail(ErrorCode::parse, path + ": truncated parameter payload");
  }
  return model;
}

std::string describe_config(const ModelConfig& cfg) { return config_to_json(cfg).dump(); }

}  // namespace mapspan
