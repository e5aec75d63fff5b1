#include "mapspan.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mapspan/bench.hpp"
#include "mapspan/model.hpp"
#include "mapspan/verify.hpp"

using nlohmann::json;

struct mapspan_dataset {
  std::vector<mapspan::QAExample> examples;
  std::size_t raw_questions = 0, dropped = 0, aligned = 0;
};

struct mapspan_model {
  mapspan::Model model;
};

namespace {

thread_local std::string g_last_error;

mapspan_status status_of(mapspan::ErrorCode code) {
  using mapspan::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return MAPSPAN_E_INVALID_ARGUMENT;
    case ErrorCode::dimension: return MAPSPAN_E_DIMENSION;
    case ErrorCode::index: return MAPSPAN_E_INDEX;
    case ErrorCode::vocabulary: return MAPSPAN_E_VOCABULARY;
    case ErrorCode::resource: return MAPSPAN_E_RESOURCE;
    case ErrorCode::training: return MAPSPAN_E_TRAINING;
    case ErrorCode::numeric: return MAPSPAN_E_NUMERIC;
    case ErrorCode::parse: return MAPSPAN_E_PARSE;
    case ErrorCode::schema: return MAPSPAN_E_SCHEMA;
    case ErrorCode::config: return MAPSPAN_E_CONFIG;
    case ErrorCode::evaluation: return MAPSPAN_E_EVALUATION;
    case ErrorCode::io: return MAPSPAN_E_IO;
  }
  return MAPSPAN_E_UNKNOWN;
}

template <class F>
mapspan_status guarded(F&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return MAPSPAN_OK;
  } catch (const mapspan::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MAPSPAN_E_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return MAPSPAN_E_UNKNOWN;
  }
}

void require(bool cond, const char* msg) {
  if (!cond) mapspan::fail(mapspan::ErrorCode::invalid_argument, msg);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) mapspan::fail(mapspan::ErrorCode::resource, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_object(const char* text, const std::string& what) {
  if (text == nullptr || *text == '\0') return json::object();
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) mapspan::fail(mapspan::ErrorCode::parse, what + ": invalid JSON");
  if (!j.is_object()) mapspan::fail(mapspan::ErrorCode::config, what + ": expected a JSON object");
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      mapspan::fail(mapspan::ErrorCode::config, what + ": unknown key \"" + it.key() + "\"");
  }
}

std::size_t get_size(const json& j, const char* key, std::size_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_unsigned())
    mapspan::fail(mapspan::ErrorCode::config,
                  std::string(key) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

double get_double(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number())
    mapspan::fail(mapspan::ErrorCode::config, std::string(key) + " must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const char* key, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean())
    mapspan::fail(mapspan::ErrorCode::config, std::string(key) + " must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string())
    mapspan::fail(mapspan::ErrorCode::config, std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::vector<std::size_t> get_size_array(const json& j, const char* key,
                                        std::vector<std::size_t> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array())
    mapspan::fail(mapspan::ErrorCode::config, std::string(key) + " must be an array");
  std::vector<std::size_t> out;
  for (const json& item : v) {
    if (!item.is_number_unsigned())
      mapspan::fail(mapspan::ErrorCode::config,
                    std::string(key) + " entries must be non-negative integers");
    out.push_back(item.get<std::size_t>());
  }
  return out;
}

struct TrainOptions {
  mapspan::ModelConfig mc;
  mapspan::TrainConfig tc;
  double dev_em_stop = 0.0;
  std::string dev_strategy;
  std::size_t dev_max_span_len = 0;
};

TrainOptions parse_train_config(const char* text) {
  const json j = parse_object(text, "train config");
  reject_unknown(j,
                 {"encoder", "d", "embed", "l", "head", "directions", "norm_mode", "sample_k",
                  "full_matrix", "shared_cols", "batch_size", "epochs", "lr", "beta1", "beta2",
                  "eps", "seed", "max_sequence", "dev_em_stop", "dev_strategy",
                  "dev_max_span_len"},
                 "train config");
  TrainOptions o;
  o.mc.encoder.kind = mapspan::encoder_kind_from_string(get_string(j, "encoder", "bi-recurrent"));
  o.mc.encoder.d = get_size(j, "d", 32);
  o.mc.encoder.embed = get_size(j, "embed", o.mc.encoder.d);
  o.mc.l = get_size(j, "l", 0);
  o.mc.head = mapspan::head_kind_from_string(get_string(j, "head", "map"));
  o.mc.directions = mapspan::directions_from_string(get_string(j, "directions", "forward"));
  o.mc.seed = get_size(j, "seed", 1);
  o.tc.norm_mode = mapspan::norm_mode_from_string(get_string(j, "norm_mode", "joint-flat"));
  o.tc.sample_k = get_size(j, "sample_k", 20);
  o.tc.full_matrix = get_bool(j, "full_matrix", false);
  o.tc.shared_cols = get_bool(j, "shared_cols", false);
  o.tc.batch_size = get_size(j, "batch_size", 32);
  o.tc.epochs = get_size(j, "epochs", 3);
  o.tc.adam.lr = get_double(j, "lr", 1e-3);
  o.tc.adam.beta1 = get_double(j, "beta1", 0.9);
  o.tc.adam.beta2 = get_double(j, "beta2", 0.999);
  o.tc.adam.eps = get_double(j, "eps", 1e-8);
  o.tc.seed = get_size(j, "seed", 1);
  o.tc.max_sequence = get_size(j, "max_sequence", 256);
  o.dev_em_stop = get_double(j, "dev_em_stop", 0.0);
  o.dev_strategy = get_string(j, "dev_strategy", "");
  o.dev_max_span_len = get_size(j, "dev_max_span_len", 0);
  return o;
}

mapspan::Strategy default_strategy(const mapspan::Model& m) {
  switch (m.config.head) {
    case mapspan::HeadKind::ind: return mapspan::Strategy::ind;
    case mapspan::HeadKind::vcp: return mapspan::Strategy::vcp;
    case mapspan::HeadKind::map:
      if (m.config.directions == mapspan::DirectionsMode::both)
        return mapspan::Strategy::map_ensemble;
      if (m.config.directions == mapspan::DirectionsMode::forward)
        return mapspan::Strategy::map_forward;
      mapspan::fail(mapspan::ErrorCode::config,
                    "a backward-only model has no default strategy; pass one explicitly");
  }
  mapspan::fail(mapspan::ErrorCode::config, "unknown head kind");
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string loss_csv_text(const std::vector<mapspan::StepLog>& log) {
  std::ostringstream out;
  out << "step,epoch,L_s,L_e,L,wall_ms\n";
  for (const auto& s : log)
    out << s.step << ',' << s.epoch << ',' << format_double(s.loss_s, "%.6f") << ','
        << format_double(s.loss_e, "%.6f") << ',' << format_double(s.loss, "%.6f") << ','
        << format_double(s.wall_ms, "%.3f") << '\n';
  return out.str();
}

struct EvalOptions {
  std::string strategy;  // empty selects the model's default
  mapspan::SearchConfig sc;
  std::size_t bin_cap = 10;
};

EvalOptions parse_eval_options(const char* text) {
  const json j = parse_object(text, "eval options");
  reject_unknown(j, {"strategy", "max_span_len", "ensemble_k", "bin_cap"}, "eval options");
  EvalOptions o;
  o.strategy = get_string(j, "strategy", "");
  o.sc.max_span_len = get_size(j, "max_span_len", 0);
  o.sc.ensemble_k = get_size(j, "ensemble_k", 20);
  o.bin_cap = get_size(j, "bin_cap", 10);
  return o;
}

}  // namespace

extern "C" {

const char* mapspan_version(void) { return "0.1.0"; }

const char* mapspan_last_error(void) { return g_last_error.c_str(); }

void mapspan_string_free(char* s) { std::free(s); }

mapspan_status mapspan_dataset_generate(const char* config_json, mapspan_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    const json j = parse_object(config_json, "generate config");
    reject_unknown(j, {"num", "passage_lo", "passage_hi", "needle_lo", "needle_hi", "vocab",
                       "seed"},
                   "generate config");
    mapspan::NeedleConfig cfg;
    cfg.num_examples = get_size(j, "num", cfg.num_examples);
    cfg.passage_lo = get_size(j, "passage_lo", cfg.passage_lo);
    cfg.passage_hi = get_size(j, "passage_hi", cfg.passage_hi);
    cfg.needle_lo = get_size(j, "needle_lo", cfg.needle_lo);
    cfg.needle_hi = get_size(j, "needle_hi", cfg.needle_hi);
    cfg.vocab_size = get_size(j, "vocab", cfg.vocab_size);
    cfg.seed = get_size(j, "seed", cfg.seed);
    auto handle = std::make_unique<mapspan_dataset>();
    handle->examples = mapspan::generate_needle_task(cfg);
    *out = handle.release();
  });
}

mapspan_status mapspan_dataset_load_jsonl(const char* path, mapspan_dataset** out) {
  return guarded([&] {
    require(path != nullptr, "path is null");
    require(out != nullptr, "out is null");
    auto handle = std::make_unique<mapspan_dataset>();
    handle->examples = mapspan::load_jsonl(path);
    *out = handle.release();
  });
}

mapspan_status mapspan_dataset_load_squad(const char* path, mapspan_dataset** out,
                                          char** stats_json) {
  return guarded([&] {
    require(path != nullptr, "path is null");
    require(out != nullptr, "out is null");
    mapspan::SquadLoadResult loaded = mapspan::load_squad(path);
    auto handle = std::make_unique<mapspan_dataset>();
    handle->examples = std::move(loaded.examples);
    handle->raw_questions = loaded.raw_questions;
    handle->dropped = loaded.dropped;
    handle->aligned = loaded.aligned;
    if (stats_json != nullptr) {
      json stats = {{"raw_questions", loaded.raw_questions},
                    {"examples", handle->examples.size()},
                    {"dropped", loaded.dropped},
                    {"aligned", loaded.aligned},
                    {"alignment_rate",
                     loaded.raw_questions == 0
                         ? 0.0
                         : static_cast<double>(loaded.aligned) /
                               static_cast<double>(loaded.raw_questions)}};
      *stats_json = dup_string(stats.dump());
    }
    *out = handle.release();
  });
}

mapspan_status mapspan_dataset_save_jsonl(const mapspan_dataset* data, const char* path) {
  return guarded([&] {
    require(data != nullptr, "data is null");
    require(path != nullptr, "path is null");
    mapspan::save_jsonl(data->examples, path);
  });
}

size_t mapspan_dataset_size(const mapspan_dataset* data) {
  return data == nullptr ? 0 : data->examples.size();
}

void mapspan_dataset_free(mapspan_dataset* data) { delete data; }

mapspan_status mapspan_train(const char* config_json, const mapspan_dataset* train_data,
                             const mapspan_dataset* dev_data, mapspan_model** out_model,
                             char** loss_csv) {
  return guarded([&] {
    require(train_data != nullptr, "train_data is null");
    require(out_model != nullptr, "out_model is null");
    const TrainOptions o = parse_train_config(config_json);
    if (o.dev_em_stop > 0.0 && dev_data == nullptr)
      mapspan::fail(mapspan::ErrorCode::config, "dev_em_stop requires dev data");

    auto handle = std::make_unique<mapspan_model>();
    handle->model = mapspan::build_model(o.mc, train_data->examples);

    mapspan::TrainHooks hooks;
    if (o.dev_em_stop > 0.0) {
      const mapspan::Strategy strategy = o.dev_strategy.empty()
                                             ? default_strategy(handle->model)
                                             : mapspan::strategy_from_string(o.dev_strategy);
      mapspan::SearchConfig sc;
      sc.max_span_len = o.dev_max_span_len;
      mapspan::Model& model = handle->model;
      const double threshold = o.dev_em_stop;
      hooks.after_epoch = [&model, dev_data, strategy, sc, threshold](std::size_t) {
        return mapspan::evaluate_model(model, dev_data->examples, strategy, sc).em >= threshold;
      };
    }
    mapspan::TrainResult result =
        mapspan::train_model(handle->model, train_data->examples, o.tc, hooks);
    if (loss_csv != nullptr) *loss_csv = dup_string(loss_csv_text(result.log));
    *out_model = handle.release();
  });
}

mapspan_status mapspan_model_save(const mapspan_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(path != nullptr, "path is null");
    mapspan::save_model(model->model, path);
  });
}

mapspan_status mapspan_model_load(const char* path, mapspan_model** out) {
  return guarded([&] {
    require(path != nullptr, "path is null");
    require(out != nullptr, "out is null");
    auto handle = std::make_unique<mapspan_model>();
    handle->model = mapspan::load_model(path);
    *out = handle.release();
  });
}

mapspan_status mapspan_model_config(const mapspan_model* model, char** config_json) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(config_json != nullptr, "config_json is null");
    *config_json = dup_string(mapspan::describe_config(model->model.config));
  });
}

void mapspan_model_free(mapspan_model* model) { delete model; }

mapspan_status mapspan_evaluate(const mapspan_model* model, const mapspan_dataset* data,
                                const char* options_json, char** report_json) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(data != nullptr, "data is null");
    require(report_json != nullptr, "report_json is null");
    const EvalOptions o = parse_eval_options(options_json);
    const mapspan::Strategy strategy = o.strategy.empty()
                                           ? default_strategy(model->model)
                                           : mapspan::strategy_from_string(o.strategy);
    const mapspan::EvalReport report =
        mapspan::evaluate_model(model->model, data->examples, strategy, o.sc, o.bin_cap);
    json bins = json::array();
    for (const auto& bin : report.bins)
      bins.push_back(
          {{"length", bin.length}, {"count", bin.count}, {"em", bin.em}, {"f1", bin.f1}});
    const json out = {{"strategy", mapspan::to_string(strategy)},
                      {"count", report.count},
                      {"em", report.em},
                      {"f1", report.f1},
                      {"by_length", std::move(bins)}};
    *report_json = dup_string(out.dump());
  });
}

mapspan_status mapspan_predict(const mapspan_model* model, const mapspan_dataset* data,
                               size_t index, const char* options_json, size_t* out_start,
                               size_t* out_end, double* out_score, char** out_text) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    require(data != nullptr, "data is null");
    if (index >= data->examples.size())
      mapspan::fail(mapspan::ErrorCode::index,
                    "example index " + std::to_string(index) + " out of range (size " +
                        std::to_string(data->examples.size()) + ")");
    const EvalOptions o = parse_eval_options(options_json);
    const mapspan::Strategy strategy = o.strategy.empty()
                                           ? default_strategy(model->model)
                                           : mapspan::strategy_from_string(o.strategy);
    const mapspan::QAExample& ex = data->examples[index];
    const mapspan::SpanPrediction pred = mapspan::predict(model->model, ex, strategy, o.sc);
    if (out_start != nullptr) *out_start = pred.s;
    if (out_end != nullptr) *out_end = pred.e;
    if (out_score != nullptr) *out_score = pred.score;
    if (out_text != nullptr) *out_text = dup_string(mapspan::prediction_text(ex, pred.s, pred.e));
  });
}

mapspan_status mapspan_gradcheck(const char* options_json, char** report_json) {
  return guarded([&] {
    require(report_json != nullptr, "report_json is null");
    const json j = parse_object(options_json, "gradcheck options");
    reject_unknown(j, {"tolerance", "step", "seed"}, "gradcheck options");
    const mapspan::GradSuiteReport report =
        mapspan::run_grad_suite(get_double(j, "tolerance", 1e-4), get_double(j, "step", 1e-5),
                                get_size(j, "seed", 1));
    json configs = json::array();
    for (const auto& c : report.cases)
      configs.push_back({{"name", c.name},
                         {"max_relative_error", c.result.max_relative_error},
                         {"coordinates", c.result.coordinates},
                         {"worst_parameter", c.result.worst_parameter},
                         {"pass", c.pass}});
    const json out = {{"tolerance", report.tolerance},
                      {"step", report.step},
                      {"pass", report.pass()},
                      {"elapsed_ms", report.elapsed_ms},
                      {"configs", std::move(configs)}};
    *report_json = dup_string(out.dump());
  });
}

mapspan_status mapspan_bench(const char* options_json, char** report_json) {
  return guarded([&] {
    require(report_json != nullptr, "report_json is null");
    const json j = parse_object(options_json, "bench options");
    reject_unknown(j,
                   {"which", "seed", "cells_ns", "cells_k", "cells_d", "cells_repeats",
                    "ksweep_ks", "ksweep_train_n", "ksweep_dev_n", "ksweep_epochs",
                    "ksweep_lr",
                    "conv_train_n", "conv_probe_n", "conv_full_epochs", "conv_tolerance",
                    "conv_norm_mode"},
                   "bench options");
    const std::string which = get_string(j, "which", "all");
    if (which != "all" && which != "cells" && which != "ksweep" && which != "convergence")
      mapspan::fail(mapspan::ErrorCode::config,
                    "which must be one of cells, ksweep, convergence, all");
    const std::uint64_t seed = get_size(j, "seed", 0);

    json out = json::object();
    if (which == "all" || which == "cells") {
      const auto rows = mapspan::bench_cells(
          get_size_array(j, "cells_ns", {64, 128, 256, 512}), get_size(j, "cells_k", 20),
          get_size(j, "cells_d", 32), get_size(j, "cells_repeats", 3), seed == 0 ? 5 : seed);
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"n", r.n},
                       {"k", r.k},
                       {"sampled_cells", r.sampled_cells},
                       {"full_cells", r.full_cells},
                       {"sampled_ms", r.sampled_ms},
                       {"full_ms", r.full_ms},
                       {"full_skipped", r.full_skipped}});
      out["cells"] = std::move(arr);
    }
    if (which == "all" || which == "ksweep") {
      mapspan::KSweepConfig kc;
      kc.ks = get_size_array(j, "ksweep_ks", kc.ks);
      kc.train_n = get_size(j, "ksweep_train_n", kc.train_n);
      kc.dev_n = get_size(j, "ksweep_dev_n", kc.dev_n);
      kc.epochs = get_size(j, "ksweep_epochs", kc.epochs);
      kc.lr = get_double(j, "ksweep_lr", kc.lr);
      if (seed != 0) kc.seed = seed;
      json arr = json::array();
      for (const auto& r : mapspan::bench_ksweep(kc))
        arr.push_back({{"k", r.k},
                       {"em", r.em},
                       {"f1", r.f1},
                       {"steps", r.steps},
                       {"train_ms", r.train_ms}});
      out["ksweep"] = std::move(arr);
    }
    if (which == "all" || which == "convergence") {
      mapspan::ConvergenceConfig cc;
      cc.train_n = get_size(j, "conv_train_n", cc.train_n);
      cc.probe_n = get_size(j, "conv_probe_n", cc.probe_n);
      cc.full_epochs = get_size(j, "conv_full_epochs", cc.full_epochs);
      cc.tolerance = get_double(j, "conv_tolerance", cc.tolerance);
      cc.norm_mode = mapspan::norm_mode_from_string(
          get_string(j, "conv_norm_mode", mapspan::to_string(cc.norm_mode)));
      if (seed != 0) cc.seed = seed;
      const mapspan::ConvergenceReport report = mapspan::bench_convergence(cc);
      auto curve = [](const std::vector<mapspan::StepLog>& log) {
        json arr = json::array();
        for (const auto& s : log)
          arr.push_back({{"step", s.step}, {"epoch", s.epoch}, {"loss", s.loss}});
        return arr;
      };
      out["convergence"] = {{"full_final", report.full_final},
                            {"target", report.target},
                            {"full_steps", report.full_steps},
                            {"sampled_steps_used", report.sampled_steps_used},
                            {"parity", report.parity},
                            {"full_eval", report.full_eval},
                            {"sampled_eval", report.sampled_eval},
                            {"full_curve", curve(report.full_log)},
                            {"sampled_curve", curve(report.sampled_log)}};
    }
    *report_json = dup_string(out.dump());
  });
}

}  // extern "C"
