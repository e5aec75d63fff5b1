// Command-line front end. Talks to the library exclusively through the C
// interface; every run writes a manifest that reproduces it.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mapspan.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw CliError{code, message}; }

void check(mapspan_status status) {
  if (status != MAPSPAN_OK) die(static_cast<int>(status), mapspan_last_error());
}

// Move-only owners for handles and strings returned by the library.
template <class T, void (*Free)(T*)>
struct Owned {
  T* ptr = nullptr;
  Owned() = default;
  Owned(Owned&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Owned& operator=(Owned&& other) noexcept {
    if (this != &other) {
      Free(ptr);
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { Free(ptr); }
};

using OwnedDataset = Owned<mapspan_dataset, mapspan_dataset_free>;
using OwnedModel = Owned<mapspan_model, mapspan_model_free>;

struct OwnedString : Owned<char, mapspan_string_free> {
  std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die(static_cast<int>(MAPSPAN_E_IO), "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) die(static_cast<int>(MAPSPAN_E_IO), "failed writing " + path.string());
}

// Merged run configuration: file values (via --config, which also accepts a
// previously emitted manifest) overridden by explicitly passed flags, with
// flag defaults filling the gaps.
struct RunConfig {
  json cfg = json::object();

  void load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die(static_cast<int>(MAPSPAN_E_IO), "cannot read config " + path);
    json parsed = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded())
      die(static_cast<int>(MAPSPAN_E_PARSE), "config " + path + ": invalid JSON");
    if (parsed.is_object() && parsed.contains("command") && parsed.contains("config"))
      parsed = parsed.at("config");
    if (!parsed.is_object())
      die(static_cast<int>(MAPSPAN_E_CONFIG), "config " + path + ": expected a JSON object");
    cfg = std::move(parsed);
  }

  template <class T>
  void apply(const char* key, const CLI::Option* opt, const T& value) {
    if (opt->count() > 0 || !cfg.contains(key)) cfg[key] = value;
  }

  void require_known(std::initializer_list<const char*> allowed, const std::string& what) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      bool known = false;
      for (const char* key : allowed)
        if (it.key() == key) {
          known = true;
          break;
        }
      if (!known)
        die(static_cast<int>(MAPSPAN_E_CONFIG), what + ": unknown key \"" + it.key() + "\"");
    }
  }

  // Sub-object with exactly the listed keys, for handing to the library.
  json pick(std::initializer_list<const char*> keys) const {
    json out = json::object();
    for (const char* key : keys)
      if (cfg.contains(key)) out[key] = cfg.at(key);
    return out;
  }

  template <class T>
  T get(const char* key) const {
    return cfg.at(key).get<T>();
  }
};

fs::path prepare_out_dir(const RunConfig& rc) {
  const fs::path dir = rc.get<std::string>("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    die(static_cast<int>(MAPSPAN_E_IO), "cannot create output directory " + dir.string());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& rc,
                    const json& outputs) {
  const json manifest = {{"command", command}, {"config", rc.cfg}, {"outputs", outputs}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

OwnedDataset load_dataset(const std::string& jsonl_path, const std::string& squad_path,
                          json* squad_stats) {
  if (jsonl_path.empty() == squad_path.empty())
    die(static_cast<int>(MAPSPAN_E_CONFIG), "exactly one dataset source is required");
  OwnedDataset data;
  if (!jsonl_path.empty()) {
    check(mapspan_dataset_load_jsonl(jsonl_path.c_str(), &data.ptr));
  } else {
    OwnedString stats;
    check(mapspan_dataset_load_squad(squad_path.c_str(), &data.ptr, &stats.ptr));
    if (squad_stats != nullptr) *squad_stats = json::parse(stats.str());
  }
  return data;
}

int cmd_gen(const RunConfig& rc) {
  const fs::path dir = prepare_out_dir(rc);

  json train_cfg = rc.pick({"num", "passage_lo", "passage_hi", "needle_lo", "needle_hi",
                            "vocab", "seed"});
  json dev_cfg = train_cfg;
  dev_cfg["num"] = rc.get<std::size_t>("dev_num");
  dev_cfg["seed"] = rc.get<std::uint64_t>("dev_seed");

  OwnedDataset train, dev;
  check(mapspan_dataset_generate(train_cfg.dump().c_str(), &train.ptr));
  check(mapspan_dataset_generate(dev_cfg.dump().c_str(), &dev.ptr));
  check(mapspan_dataset_save_jsonl(train.ptr, (dir / "train.jsonl").string().c_str()));
  check(mapspan_dataset_save_jsonl(dev.ptr, (dir / "dev.jsonl").string().c_str()));

  write_manifest(dir, "gen", rc, {{"train", "train.jsonl"}, {"dev", "dev.jsonl"}});
  std::printf("wrote %zu train and %zu dev examples to %s\n", mapspan_dataset_size(train.ptr),
              mapspan_dataset_size(dev.ptr), dir.string().c_str());
  return 0;
}

int cmd_train(const RunConfig& rc) {
  const fs::path dir = prepare_out_dir(rc);

  json squad_stats;
  OwnedDataset train = load_dataset(rc.get<std::string>("train"), rc.get<std::string>("squad"),
                                    &squad_stats);
  OwnedDataset dev;
  const std::string dev_path = rc.get<std::string>("dev");
  if (!dev_path.empty()) check(mapspan_dataset_load_jsonl(dev_path.c_str(), &dev.ptr));

  const json api_cfg = rc.pick({"encoder", "d", "embed", "l", "head", "directions", "norm_mode",
                                "sample_k", "full_matrix", "shared_cols", "batch_size", "epochs",
                                "lr", "beta1", "beta2", "eps", "seed", "max_sequence",
                                "dev_em_stop", "dev_strategy", "dev_max_span_len"});
  OwnedModel model;
  OwnedString loss_csv;
  check(mapspan_train(api_cfg.dump().c_str(), train.ptr, dev.ptr, &model.ptr, &loss_csv.ptr));
  check(mapspan_model_save(model.ptr, (dir / "model.ckpt").string().c_str()));
  write_file(dir / "loss.csv", loss_csv.str());

  json outputs = {{"model", "model.ckpt"}, {"loss", "loss.csv"}};
  if (!squad_stats.is_null()) outputs["squad_stats"] = squad_stats;
  write_manifest(dir, "train", rc, outputs);

  const std::string csv = loss_csv.str();
  const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  const std::size_t steps = lines > 0 ? lines - 1 : 0;
  std::printf("trained %zu steps on %zu examples; checkpoint at %s\n", steps,
              mapspan_dataset_size(train.ptr), (dir / "model.ckpt").string().c_str());
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  const fs::path dir = prepare_out_dir(rc);

  json squad_stats;
  OwnedDataset data = load_dataset(rc.get<std::string>("data"), rc.get<std::string>("squad"),
                                   &squad_stats);
  OwnedModel model;
  check(mapspan_model_load(rc.get<std::string>("model").c_str(), &model.ptr));

  const json options = rc.pick({"strategy", "max_span_len", "ensemble_k", "bin_cap"});
  OwnedString report_text;
  check(mapspan_evaluate(model.ptr, data.ptr, options.dump().c_str(), &report_text.ptr));
  const json report = json::parse(report_text.str());

  json full_report = report;
  if (!squad_stats.is_null()) full_report["squad_stats"] = squad_stats;
  write_file(dir / "report.json", full_report.dump(2) + "\n");

  std::ostringstream by_length;
  by_length << "length,count,em,f1\n";
  for (const json& bin : report.at("by_length"))
    by_length << bin.at("length").get<std::size_t>() << ',' << bin.at("count").get<std::size_t>()
              << ',' << format_double(bin.at("em").get<double>(), "%.4f") << ','
              << format_double(bin.at("f1").get<double>(), "%.4f") << '\n';
  write_file(dir / "report_by_length.csv", by_length.str());

  write_manifest(dir, "eval", rc,
                 {{"report", "report.json"}, {"by_length", "report_by_length.csv"}});
  std::printf("%s: EM %.2f F1 %.2f on %zu examples\n",
              report.at("strategy").get<std::string>().c_str(), report.at("em").get<double>(),
              report.at("f1").get<double>(), report.at("count").get<std::size_t>());
  return 0;
}

int cmd_gradcheck(const RunConfig& rc) {
  const json options = rc.pick({"tolerance", "step", "seed"});
  OwnedString report_text;
  check(mapspan_gradcheck(options.dump().c_str(), &report_text.ptr));
  const json report = json::parse(report_text.str());

  for (const json& c : report.at("configs"))
    std::printf("%-26s max_rel %.3e (worst %s over %zu coordinates) %s\n",
                c.at("name").get<std::string>().c_str(),
                c.at("max_relative_error").get<double>(),
                c.at("worst_parameter").get<std::string>().c_str(),
                c.at("coordinates").get<std::size_t>(),
                c.at("pass").get<bool>() ? "PASS" : "FAIL");
  const bool pass = report.at("pass").get<bool>();
  std::printf("gradcheck %s (tolerance %.1e, %.0f ms)\n", pass ? "PASS" : "FAIL",
              report.at("tolerance").get<double>(), report.at("elapsed_ms").get<double>());

  if (rc.cfg.contains("out")) {
    const fs::path dir = prepare_out_dir(rc);
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_manifest(dir, "gradcheck", rc, {{"report", "report.json"}});
  }
  return pass ? 0 : 1;
}

int cmd_bench(const RunConfig& rc) {
  const fs::path dir = prepare_out_dir(rc);

  const json options = rc.pick({"which", "seed", "cells_ns", "cells_k", "cells_d",
                                "cells_repeats", "ksweep_ks", "ksweep_train_n", "ksweep_dev_n",
                                "ksweep_epochs", "ksweep_lr", "conv_train_n", "conv_probe_n",
                                "conv_full_epochs", "conv_tolerance", "conv_norm_mode"});
  OwnedString report_text;
  check(mapspan_bench(options.dump().c_str(), &report_text.ptr));
  const json report = json::parse(report_text.str());

  json outputs = {{"report", "report.json"}};
  write_file(dir / "report.json", report.dump(2) + "\n");

  if (report.contains("cells")) {
    std::ostringstream csv;
    csv << "n,k,sampled_cells,full_cells,sampled_ms,full_ms,full_skipped\n";
    for (const json& r : report.at("cells"))
      csv << r.at("n").get<std::size_t>() << ',' << r.at("k").get<std::size_t>() << ','
          << r.at("sampled_cells").get<std::size_t>() << ','
          << r.at("full_cells").get<std::size_t>() << ','
          << format_double(r.at("sampled_ms").get<double>(), "%.3f") << ','
          << (r.at("full_skipped").get<bool>()
                  ? std::string("")
                  : format_double(r.at("full_ms").get<double>(), "%.3f"))
          << ',' << (r.at("full_skipped").get<bool>() ? "yes" : "no") << '\n';
    write_file(dir / "bench_cells.csv", csv.str());
    outputs["cells"] = "bench_cells.csv";
  }
  if (report.contains("ksweep")) {
    std::ostringstream csv;
    csv << "k,em,f1,steps,train_ms\n";
    for (const json& r : report.at("ksweep"))
      csv << r.at("k").get<std::size_t>() << ','
          << format_double(r.at("em").get<double>(), "%.4f") << ','
          << format_double(r.at("f1").get<double>(), "%.4f") << ','
          << r.at("steps").get<std::size_t>() << ','
          << format_double(r.at("train_ms").get<double>(), "%.1f") << '\n';
    write_file(dir / "bench_ksweep.csv", csv.str());
    outputs["ksweep"] = "bench_ksweep.csv";
  }
  if (report.contains("convergence")) {
    const json& conv = report.at("convergence");
    const json& full = conv.at("full_curve");
    const json& sampled = conv.at("sampled_curve");
    std::ostringstream csv;
    csv << "step,full_loss,sampled_loss\n";
    const std::size_t rows = std::max(full.size(), sampled.size());
    for (std::size_t i = 0; i < rows; ++i) {
      csv << (i + 1) << ',';
      if (i < full.size()) csv << format_double(full[i].at("loss").get<double>(), "%.6f");
      csv << ',';
      if (i < sampled.size()) csv << format_double(sampled[i].at("loss").get<double>(), "%.6f");
      csv << '\n';
    }
    write_file(dir / "bench_convergence.csv", csv.str());
    outputs["convergence"] = "bench_convergence.csv";
    std::printf("convergence: full final %.4f, sampled parity %s (%zu vs %zu steps)\n",
                conv.at("full_final").get<double>(),
                conv.at("parity").get<bool>() ? "reached" : "missed",
                conv.at("sampled_steps_used").get<std::size_t>(),
                conv.at("full_steps").get<std::size_t>());
  }
  write_manifest(dir, "bench", rc, outputs);
  std::printf("bench reports written to %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"span-extraction laboratory"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic needle-task splits");
  std::string gen_config, gen_out = "runs/gen";
  std::size_t gen_num = 1000, gen_plo = 20, gen_phi = 40, gen_nlo = 1, gen_nhi = 5;
  std::size_t gen_vocab = 50, gen_dev_num = 500;
  std::uint64_t gen_seed = 1, gen_dev_seed = 2;
  gen->add_option("--config", gen_config, "JSON config file (or a manifest) to start from");
  auto* g_num = gen->add_option("--num", gen_num, "training examples");
  auto* g_plo = gen->add_option("--passage-lo", gen_plo, "minimum passage length");
  auto* g_phi = gen->add_option("--passage-hi", gen_phi, "maximum passage length");
  auto* g_nlo = gen->add_option("--needle-lo", gen_nlo, "minimum needle length");
  auto* g_nhi = gen->add_option("--needle-hi", gen_nhi, "maximum needle length");
  auto* g_vocab = gen->add_option("--vocab", gen_vocab, "vocabulary size");
  auto* g_seed = gen->add_option("--seed", gen_seed, "train split seed");
  auto* g_dnum = gen->add_option("--dev-num", gen_dev_num, "dev examples");
  auto* g_dseed = gen->add_option("--dev-seed", gen_dev_seed, "dev split seed");
  auto* g_out = gen->add_option("--out", gen_out, "output directory");

  // train
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string tr_config, tr_train, tr_squad, tr_dev, tr_out = "runs/train";
  std::string tr_encoder = "bi-recurrent", tr_head = "map", tr_directions = "forward";
  std::string tr_norm = "joint-flat", tr_dev_strategy;
  std::size_t tr_d = 32, tr_embed = 0, tr_l = 0, tr_k = 20, tr_batch = 32, tr_epochs = 3;
  std::size_t tr_max_seq = 256, tr_dev_msl = 0;
  double tr_lr = 1e-3, tr_b1 = 0.9, tr_b2 = 0.999, tr_eps = 1e-8, tr_dev_em = 0.0;
  bool tr_full = false, tr_shared = false;
  std::uint64_t tr_seed = 1;
  train->add_option("--config", tr_config, "JSON config file (or a manifest) to start from");
  auto* t_train = train->add_option("--train", tr_train, "training data (JSONL)");
  auto* t_squad = train->add_option("--squad", tr_squad, "training data (SQuAD JSON)");
  auto* t_dev = train->add_option("--dev", tr_dev, "dev data (JSONL) for early stopping");
  auto* t_enc = train->add_option("--encoder", tr_encoder, "bi-recurrent | self-attention");
  auto* t_head = train->add_option("--head", tr_head, "ind | vcp | map");
  auto* t_dirs = train->add_option("--directions", tr_directions, "forward | backward | both");
  auto* t_norm = train->add_option("--norm-mode", tr_norm, "joint-flat | row-wise");
  auto* t_d = train->add_option("--d", tr_d, "hidden size");
  auto* t_embed = train->add_option("--embed", tr_embed, "embedding width (0: use d)");
  auto* t_l = train->add_option("--l", tr_l, "attention width (0: use d)");
  auto* t_k = train->add_option("--sample-k", tr_k, "sampled rows/columns per example");
  auto* t_full = train->add_flag("--full-matrix", tr_full, "train on the full conditional row");
  auto* t_shared = train->add_flag("--shared-cols", tr_shared, "one column set for all rows");
  auto* t_batch = train->add_option("--batch-size", tr_batch, "examples per optimizer step");
  auto* t_epochs = train->add_option("--epochs", tr_epochs, "training epochs");
  auto* t_lr = train->add_option("--lr", tr_lr, "Adam learning rate");
  auto* t_b1 = train->add_option("--beta1", tr_b1, "Adam beta1");
  auto* t_b2 = train->add_option("--beta2", tr_b2, "Adam beta2");
  auto* t_eps = train->add_option("--eps", tr_eps, "Adam epsilon");
  auto* t_seed = train->add_option("--seed", tr_seed, "model init and shuffle seed");
  auto* t_maxseq = train->add_option("--max-sequence", tr_max_seq, "full-matrix length guard");
  auto* t_devem = train->add_option("--dev-em-stop", tr_dev_em,
                                    "stop once dev EM reaches this percent");
  auto* t_devstrat = train->add_option("--dev-strategy", tr_dev_strategy,
                                       "strategy for the dev early-stop evaluation");
  auto* t_devmsl = train->add_option("--dev-max-span-len", tr_dev_msl,
                                     "span cap for the dev evaluation (0: unlimited)");
  auto* t_out = train->add_option("--out", tr_out, "output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string ev_config, ev_model, ev_data, ev_squad, ev_strategy, ev_out = "runs/eval";
  std::size_t ev_msl = 0, ev_ek = 20, ev_bins = 10;
  eval->add_option("--config", ev_config, "JSON config file (or a manifest) to start from");
  auto* e_model = eval->add_option("--model", ev_model, "checkpoint path");
  auto* e_data = eval->add_option("--data", ev_data, "dataset (JSONL)");
  auto* e_squad = eval->add_option("--squad", ev_squad, "dataset (SQuAD JSON)");
  auto* e_strat = eval->add_option("--strategy", ev_strategy,
                                   "ind | vcp | map-forward | map-ensemble");
  auto* e_msl = eval->add_option("--max-span-len", ev_msl,
                                 "span cap (0: unlimited; SQuAD input defaults to 30)");
  auto* e_ek = eval->add_option("--ensemble-k", ev_ek, "pairs kept per direction");
  auto* e_bins = eval->add_option("--bin-cap", ev_bins, "answer-length bin cap");
  auto* e_out = eval->add_option("--out", ev_out, "output directory");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_config, gc_out;
  double gc_tol = 1e-4, gc_step = 1e-5;
  std::uint64_t gc_seed = 1;
  gradcheck->add_option("--config", gc_config, "JSON config file (or a manifest) to start from");
  auto* c_tol = gradcheck->add_option("--tolerance", gc_tol, "max relative error allowed");
  auto* c_step = gradcheck->add_option("--step", gc_step, "central-difference step");
  auto* c_seed = gradcheck->add_option("--seed", gc_seed, "instance seed");
  auto* c_out = gradcheck->add_option("--out", gc_out, "optional report directory");

  // bench
  auto* bench = app.add_subcommand("bench", "cost, k-sweep, and convergence benchmarks");
  std::string bn_config, bn_which = "all", bn_out = "runs/bench";
  std::vector<std::size_t> bn_ns = {64, 128, 256, 512}, bn_ks = {5, 10, 20, 30};
  std::size_t bn_ck = 20, bn_cd = 32, bn_cr = 3;
  std::size_t bn_ktrain = 600, bn_kdev = 200, bn_kepochs = 6;
  std::size_t bn_ctrain = 512, bn_cprobe = 64, bn_cepochs = 32;
  std::string bn_cnorm = "row-wise";
  double bn_ctol = 0.10, bn_klr = 2e-3;
  std::uint64_t bn_seed = 0;
  bench->add_option("--config", bn_config, "JSON config file (or a manifest) to start from");
  auto* b_which = bench->add_option("--which", bn_which, "cells | ksweep | convergence | all");
  auto* b_seed = bench->add_option("--seed", bn_seed, "seed override (0: per-bench defaults)");
  auto* b_ns = bench->add_option("--cells-ns", bn_ns, "sequence lengths for the cell bench");
  auto* b_ck = bench->add_option("--cells-k", bn_ck, "slice size for the cell bench");
  auto* b_cd = bench->add_option("--cells-d", bn_cd, "hidden size for the cell bench");
  auto* b_cr = bench->add_option("--cells-repeats", bn_cr, "timing repeats (best-of)");
  auto* b_ks = bench->add_option("--ksweep-ks", bn_ks, "k values to sweep");
  auto* b_ktrain = bench->add_option("--ksweep-train-n", bn_ktrain, "k-sweep training examples");
  auto* b_kdev = bench->add_option("--ksweep-dev-n", bn_kdev, "k-sweep dev examples");
  auto* b_kepochs = bench->add_option("--ksweep-epochs", bn_kepochs, "k-sweep epochs");
  auto* b_klr = bench->add_option("--ksweep-lr", bn_klr, "k-sweep learning rate");
  auto* b_ctrain = bench->add_option("--conv-train-n", bn_ctrain, "convergence train examples");
  auto* b_cprobe = bench->add_option("--conv-probe-n", bn_cprobe, "convergence probe examples");
  auto* b_cepochs = bench->add_option("--conv-full-epochs", bn_cepochs,
                                      "epochs for the full-matrix reference run");
  auto* b_ctol = bench->add_option("--conv-tolerance", bn_ctol, "parity threshold");
  auto* b_cnorm = bench->add_option("--conv-norm-mode", bn_cnorm,
                                    "normalization for the sampled run (row-wise | joint-flat)");
  auto* b_out = bench->add_option("--out", bn_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      RunConfig rc;
      if (!gen_config.empty()) rc.load(gen_config);
      rc.apply("num", g_num, gen_num);
      rc.apply("passage_lo", g_plo, gen_plo);
      rc.apply("passage_hi", g_phi, gen_phi);
      rc.apply("needle_lo", g_nlo, gen_nlo);
      rc.apply("needle_hi", g_nhi, gen_nhi);
      rc.apply("vocab", g_vocab, gen_vocab);
      rc.apply("seed", g_seed, gen_seed);
      rc.apply("dev_num", g_dnum, gen_dev_num);
      rc.apply("dev_seed", g_dseed, gen_dev_seed);
      rc.apply("out", g_out, gen_out);
      rc.require_known({"num", "passage_lo", "passage_hi", "needle_lo", "needle_hi", "vocab",
                        "seed", "dev_num", "dev_seed", "out"},
                       "gen config");
      return cmd_gen(rc);
    }
    if (train->parsed()) {
      RunConfig rc;
      if (!tr_config.empty()) rc.load(tr_config);
      rc.apply("train", t_train, tr_train);
      rc.apply("squad", t_squad, tr_squad);
      rc.apply("dev", t_dev, tr_dev);
      rc.apply("encoder", t_enc, tr_encoder);
      rc.apply("head", t_head, tr_head);
      rc.apply("directions", t_dirs, tr_directions);
      rc.apply("norm_mode", t_norm, tr_norm);
      rc.apply("d", t_d, tr_d);
      if (t_embed->count() > 0 || rc.cfg.contains("embed")) {
        rc.apply("embed", t_embed, tr_embed);
        if (rc.get<std::size_t>("embed") == 0) rc.cfg["embed"] = rc.get<std::size_t>("d");
      }
      rc.apply("l", t_l, tr_l);
      rc.apply("sample_k", t_k, tr_k);
      rc.apply("full_matrix", t_full, tr_full);
      rc.apply("shared_cols", t_shared, tr_shared);
      rc.apply("batch_size", t_batch, tr_batch);
      rc.apply("epochs", t_epochs, tr_epochs);
      rc.apply("lr", t_lr, tr_lr);
      rc.apply("beta1", t_b1, tr_b1);
      rc.apply("beta2", t_b2, tr_b2);
      rc.apply("eps", t_eps, tr_eps);
      rc.apply("seed", t_seed, tr_seed);
      rc.apply("max_sequence", t_maxseq, tr_max_seq);
      rc.apply("dev_em_stop", t_devem, tr_dev_em);
      if (t_devstrat->count() > 0 || rc.cfg.contains("dev_strategy"))
        rc.apply("dev_strategy", t_devstrat, tr_dev_strategy);
      rc.apply("dev_max_span_len", t_devmsl, tr_dev_msl);
      rc.apply("out", t_out, tr_out);
      rc.require_known({"train", "squad", "dev", "encoder", "head", "directions", "norm_mode",
                        "d", "embed", "l", "sample_k", "full_matrix", "shared_cols",
                        "batch_size", "epochs", "lr", "beta1", "beta2", "eps", "seed",
                        "max_sequence", "dev_em_stop", "dev_strategy", "dev_max_span_len",
                        "out"},
                       "train config");
      return cmd_train(rc);
    }
    if (eval->parsed()) {
      RunConfig rc;
      if (!ev_config.empty()) rc.load(ev_config);
      rc.apply("model", e_model, ev_model);
      rc.apply("data", e_data, ev_data);
      rc.apply("squad", e_squad, ev_squad);
      if (e_strat->count() > 0 || rc.cfg.contains("strategy"))
        rc.apply("strategy", e_strat, ev_strategy);
      // SQuAD input defaults to the answer-length cap; synthetic stays unlimited.
      if (e_msl->count() == 0 && !rc.cfg.contains("max_span_len") &&
          !rc.get<std::string>("squad").empty())
        rc.cfg["max_span_len"] = 30;
      rc.apply("max_span_len", e_msl, ev_msl);
      rc.apply("ensemble_k", e_ek, ev_ek);
      rc.apply("bin_cap", e_bins, ev_bins);
      rc.apply("out", e_out, ev_out);
      rc.require_known({"model", "data", "squad", "strategy", "max_span_len", "ensemble_k",
                        "bin_cap", "out"},
                       "eval config");
      return cmd_eval(rc);
    }
    if (gradcheck->parsed()) {
      RunConfig rc;
      if (!gc_config.empty()) rc.load(gc_config);
      rc.apply("tolerance", c_tol, gc_tol);
      rc.apply("step", c_step, gc_step);
      rc.apply("seed", c_seed, gc_seed);
      if (c_out->count() > 0 || rc.cfg.contains("out")) rc.apply("out", c_out, gc_out);
      rc.require_known({"tolerance", "step", "seed", "out"}, "gradcheck config");
      return cmd_gradcheck(rc);
    }
    if (bench->parsed()) {
      RunConfig rc;
      if (!bn_config.empty()) rc.load(bn_config);
      rc.apply("which", b_which, bn_which);
      rc.apply("seed", b_seed, bn_seed);
      rc.apply("cells_ns", b_ns, bn_ns);
      rc.apply("cells_k", b_ck, bn_ck);
      rc.apply("cells_d", b_cd, bn_cd);
      rc.apply("cells_repeats", b_cr, bn_cr);
      rc.apply("ksweep_ks", b_ks, bn_ks);
      rc.apply("ksweep_train_n", b_ktrain, bn_ktrain);
      rc.apply("ksweep_dev_n", b_kdev, bn_kdev);
      rc.apply("ksweep_epochs", b_kepochs, bn_kepochs);
      rc.apply("ksweep_lr", b_klr, bn_klr);
      rc.apply("conv_train_n", b_ctrain, bn_ctrain);
      rc.apply("conv_probe_n", b_cprobe, bn_cprobe);
      rc.apply("conv_full_epochs", b_cepochs, bn_cepochs);
      rc.apply("conv_tolerance", b_ctol, bn_ctol);
      rc.apply("conv_norm_mode", b_cnorm, bn_cnorm);
      rc.apply("out", b_out, bn_out);
      rc.require_known({"which", "seed", "cells_ns", "cells_k", "cells_d", "cells_repeats",
                        "ksweep_ks", "ksweep_train_n", "ksweep_dev_n", "ksweep_epochs",
                        "ksweep_lr",
                        "conv_train_n", "conv_probe_n", "conv_full_epochs", "conv_tolerance",
                        "conv_norm_mode", "out"},
                       "bench config");
      return cmd_bench(rc);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code == 0 ? 1 : e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(MAPSPAN_E_UNKNOWN);
  }
  return 0;
}
