#include "mapspan/bench.hpp"

#include <chrono>

#include "mapspan/bound.hpp"
#include "mapspan/model.hpp"
#include "mapspan/rng.hpp"

namespace mapspan {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Tensor random_states(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-0.9, 0.9);
  return t;
}

}  // namespace

std::vector<BenchCellsRow> bench_cells(const std::vector<std::size_t>& ns, std::size_t k,
                                       std::size_t d, std::size_t repeats, std::uint64_t seed) {
  if (ns.empty() || k == 0 || d == 0 || repeats == 0)
    fail(ErrorCode::invalid_argument, "bench_cells: ns, k, d, repeats must be nonzero");
  Rng rng(seed);
  ParameterSet params;
  init_map_params(params, d, d, Direction::forward, rng);

  std::vector<BenchCellsRow> rows;
  for (std::size_t n : ns) {
    EncoderOutput enc;
    enc.H = random_states(n, d, rng);
    enc.H_Q = random_states(4, d, rng);
    const ProbVector p_first = map_first(enc, params, Direction::forward);
    const std::size_t truth_s = n / 3, truth_e = n / 2;

    TrainConfig cfg;
    cfg.sample_k = k;
    cfg.max_sequence = n;

    BenchCellsRow row;
    row.n = n;
    row.k = k;
    row.full_cells = n * n;
    row.sampled_ms = 1e300;
    row.full_ms = 1e300;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      SampledMatrix sm =
          build_sampled_matrix(enc, params, Direction::forward, p_first, truth_s, truth_e, cfg);
      row.sampled_ms = std::min(row.sampled_ms, ms_since(t0));
      row.sampled_cells = sm.cell_count();
    }
    for (std::size_t r = 0; r < repeats && !row.full_skipped; ++r) {
      try {
        const auto t0 = Clock::now();
        ProbMatrix full = map_full_matrix(enc, params, Direction::forward);
        row.full_ms = std::min(row.full_ms, ms_since(t0));
        (void)full;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::resource) throw;
        row.full_skipped = true;
        row.full_ms = 0.0;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchKRow> bench_ksweep(const KSweepConfig& cfg) {
  if (cfg.ks.empty()) fail(ErrorCode::invalid_argument, "bench_ksweep: ks must be nonempty");
  NeedleConfig gen;
  gen.num_examples = cfg.train_n + cfg.dev_n;
  gen.seed = cfg.seed;
  const std::vector<QAExample> all = generate_needle_task(gen);
  const std::vector<QAExample> train(all.begin(), all.begin() + cfg.train_n);
  const std::vector<QAExample> dev(all.begin() + cfg.train_n, all.end());

  std::vector<BenchKRow> rows;
  for (std::size_t k : cfg.ks) {
    ModelConfig mc;
    mc.encoder.d = cfg.d;
    mc.encoder.embed = cfg.d;
    mc.head = HeadKind::map;
    mc.directions = DirectionsMode::forward;
    mc.seed = cfg.seed;
    Model model = build_model(mc, train);

    TrainConfig tc;
    tc.sample_k = k;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.adam.lr = cfg.lr;
    tc.seed = cfg.seed;

    BenchKRow row;
    row.k = k;
    const auto t0 = Clock::now();
    TrainResult result = train_model(model, train, tc);
    row.train_ms = ms_since(t0);
    row.steps = result.log.size();
    const EvalReport report = evaluate_model(model, dev, Strategy::map_forward, SearchConfig{});
    row.em = report.em;
    row.f1 = report.f1;
    rows.push_back(row);
  }
  return rows;
}

double probe_full_loss(const ParameterSet& params, const EncoderConfig& enc_cfg,
                       const std::vector<TrainExample>& probe, const TrainConfig& base) {
  if (probe.empty()) fail(ErrorCode::invalid_argument, "probe_full_loss: empty probe set");
  TrainConfig cfg = base;
  cfg.full_matrix = true;
  double sum = 0.0;
  for (const TrainExample& ex : probe) {
    Graph g;
    Bound b = Bound::bind(g, params, /*track_grad=*/false);
    sum += g.value(example_loss_node(g, b, ex, enc_cfg, cfg))[0];
  }
  return sum / static_cast<double>(probe.size());
}

ConvergenceReport bench_convergence(const ConvergenceConfig& cfg) {
  NeedleConfig gen;
  gen.num_examples = cfg.train_n + cfg.probe_n;
  gen.passage_lo = cfg.passage_lo;
  gen.passage_hi = cfg.passage_hi;
  gen.needle_lo = cfg.needle_lo;
  gen.needle_hi = cfg.needle_hi;
  gen.vocab_size = cfg.vocab;
  gen.seed = cfg.seed;
  const std::vector<QAExample> all = generate_needle_task(gen);
  const std::vector<QAExample> train_qa(all.begin(), all.begin() + cfg.train_n);
  const std::vector<QAExample> probe_qa(all.begin() + cfg.train_n, all.end());

  ModelConfig mc;
  mc.encoder.d = cfg.d;
  mc.encoder.embed = cfg.d;
  mc.head = HeadKind::map;
  mc.directions = DirectionsMode::forward;
  mc.seed = cfg.seed;

  TrainConfig base;
  base.head = HeadKind::map;
  base.sample_k = cfg.sample_k;
  base.norm_mode = cfg.norm_mode;
  base.batch_size = cfg.batch_size;
  base.seed = cfg.seed;
  base.max_sequence = cfg.passage_hi + cfg.needle_hi + 1 + 8;

  ConvergenceReport report;

  // Full-matrix reference run.
  Model full_model = build_model(mc, train_qa);
  const std::vector<TrainExample> probe = to_train_examples(probe_qa, full_model.vocab);
  {
    TrainConfig tc = base;
    tc.full_matrix = true;
    tc.epochs = cfg.full_epochs;
    TrainHooks hooks;
    hooks.after_epoch = [&](std::size_t) {
      report.full_eval.push_back(
          probe_full_loss(full_model.params, full_model.config.encoder, probe, base));
      return false;
    };
    TrainResult result = train_model(full_model, train_qa, tc, hooks);
    report.full_log = std::move(result.log);
  }
  report.full_steps = report.full_log.size();
  if (report.full_eval.empty()) fail(ErrorCode::invalid_argument, "bench_convergence: no epochs");
  report.full_final = report.full_eval.back();
  report.target = report.full_final * (1.0 + cfg.tolerance);

  // Sampled run, same init, up to twice the steps; stops at parity.
  Model sampled_model = build_model(mc, train_qa);
  {
    TrainConfig tc = base;
    tc.full_matrix = false;
    tc.epochs = cfg.full_epochs * 2;
    std::size_t steps_per_epoch = 0;
    TrainHooks hooks;
    hooks.after_epoch = [&](std::size_t epoch) {
      const double loss =
          probe_full_loss(sampled_model.params, sampled_model.config.encoder, probe, base);
      report.sampled_eval.push_back(loss);
      if (!report.parity && loss <= report.target) {
        report.parity = true;
        report.sampled_steps_used = epoch * steps_per_epoch;
        return true;
      }
      return false;
    };
    steps_per_epoch =
        (to_train_examples(train_qa, sampled_model.vocab).size() + cfg.batch_size - 1) /
        cfg.batch_size;
    TrainResult result = train_model(sampled_model, train_qa, tc, hooks);
    report.sampled_log = std::move(result.log);
    if (!report.parity) report.sampled_steps_used = report.sampled_log.size();
  }
  return report;
}

}  // namespace mapspan
