#include "mapspan/encoder.hpp"

#include <cmath>

#include "mapspan/gru.hpp"

namespace mapspan {

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "bi-recurrent") return EncoderKind::bi_recurrent;
  if (s == "self-attention") return EncoderKind::self_attention;
  fail(ErrorCode::config, "unknown encoder kind: " + s);
}

std::string to_string(EncoderKind kind) {
  return kind == EncoderKind::bi_recurrent ? "bi-recurrent" : "self-attention";
}

void EncoderConfig::validate() const {
  if (d < 1 || embed < 1) fail(ErrorCode::config, "encoder sizes must be at least 1");
  if (kind == EncoderKind::bi_recurrent && d % 2 != 0)
    fail(ErrorCode::config,
         "hidden size must be even for the bidirectional encoder, got " + std::to_string(d));
  if (vocab_size < 3) fail(ErrorCode::config, "vocabulary must include the reserved tokens");
}

Tensor uniform_tensor(Shape shape, Rng& rng, double radius) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-radius, radius);
  return t;
}

namespace {

Tensor sinusoid_positions(std::size_t len, std::size_t width) {
  Tensor p = Tensor::zeros({len, width});
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t j = 0; j < width; ++j) {
      const double rate = std::pow(10000.0, -2.0 * double(j / 2) / double(width));
      const double angle = double(t) * rate;
      p.at(t, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return p;
}

NodeId embed_row(Graph& g, NodeId table, std::size_t row, std::size_t width) {
  return g.reshape(g.gather(table, {row}, GatherAxis::rows), {width});
}

}  // namespace

void init_encoder(ParameterSet& params, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  // Unit-variance embeddings keep dot-product token alignment discriminative
  // at initialization for both encoder kinds.
  params.add("enc.embed",
             uniform_tensor({cfg.vocab_size, cfg.embed}, rng, std::sqrt(3.0)));
  if (cfg.kind == EncoderKind::bi_recurrent) {
    // Each step consumes [embedding ; question-aligned summary].
    const std::size_t h = cfg.d / 2;
    init_gru_cell(params, "enc.gru_f", h, 2 * cfg.embed, rng);
    init_gru_cell(params, "enc.gru_b", h, 2 * cfg.embed, rng);
  } else {
    // Identity-biased query/key projections make same-token agreement visible
    // at initialization instead of waiting for three matrices to co-adapt.
    for (const char* name : {"wq", "wk"}) {
      Tensor t = uniform_tensor({cfg.embed, cfg.d}, rng, 0.1);
      for (std::size_t i = 0; i < std::min(cfg.embed, cfg.d); ++i) t.at(i, i) += 1.0;
      params.add(std::string("enc.attn.") + name, std::move(t));
    }
    for (const char* name : {"wv", "wproj"})
      params.add(std::string("enc.attn.") + name, uniform_tensor({cfg.embed, cfg.d}, rng));
  }
}

EncoderNodes encode_nodes(Graph& g, const std::vector<TokenId>& question,
                          const std::vector<TokenId>& passage, const Bound& bound,
                          const EncoderConfig& cfg) {
  cfg.validate();
  if (question.empty() || passage.empty())
    fail(ErrorCode::invalid_argument, "encode: question and passage must be nonempty");

  std::vector<std::size_t> ids;
  ids.reserve(question.size() + 1 + passage.size());
  for (TokenId t : question) ids.push_back(t);
  ids.push_back(Vocabulary::sep_id);
  for (TokenId t : passage) ids.push_back(t);
  for (std::size_t id : ids)
    if (id >= cfg.vocab_size)
      fail(ErrorCode::vocabulary, "token id " + std::to_string(id) +
                                      " outside vocabulary of size " +
                                      std::to_string(cfg.vocab_size));

  const std::size_t m = question.size(), n = passage.size(), total = ids.size();
  NodeId table = bound["enc.embed"];
  NodeId x_all = g.gather(table, ids, GatherAxis::rows);

  std::vector<std::size_t> passage_pos(n), question_pos(m);
  for (std::size_t i = 0; i < n; ++i) passage_pos[i] = m + 1 + i;
  for (std::size_t i = 0; i < m; ++i) question_pos[i] = i;

  if (cfg.kind == EncoderKind::bi_recurrent) {
    // Soft-align every position against the question embeddings so the
    // recurrence composes local match evidence instead of memorizing the
    // question across the whole passage.
    NodeId x_q = g.gather(x_all, question_pos, GatherAxis::rows);
    NodeId align = g.scale(g.matmul(x_all, g.transpose(x_q)), 1.0 / std::sqrt(double(cfg.embed)));
    std::vector<NodeId> align_rows(total);
    for (std::size_t t = 0; t < total; ++t)
      align_rows[t] = g.masked_softmax(g.reshape(g.gather(align, {t}, GatherAxis::rows), {m}));
    NodeId aligned = g.matmul(g.stack_rows(align_rows), x_q);

    const std::size_t h = cfg.d / 2;
    GruRefs fwd = gru_refs(bound, "enc.gru_f");
    GruRefs bwd = gru_refs(bound, "enc.gru_b");
    NodeId ones = g.input(Tensor::full({h}, 1.0));
    NodeId zero_state = g.input(Tensor::zeros({h}));

    std::vector<NodeId> inputs(total);
    for (std::size_t t = 0; t < total; ++t)
      inputs[t] = g.concat_vec(embed_row(g, x_all, t, cfg.embed),
                               embed_row(g, aligned, t, cfg.embed));
    std::vector<NodeId> fstates(total), bstates(total);
    NodeId state = zero_state;
    for (std::size_t t = 0; t < total; ++t) {
      state = gru_step(g, fwd, inputs[t], state, ones);
      fstates[t] = state;
    }
    state = zero_state;
    for (std::size_t t = total; t-- > 0;) {
      state = gru_step(g, bwd, inputs[t], state, ones);
      bstates[t] = state;
    }
    std::vector<NodeId> combined(total);
    for (std::size_t t = 0; t < total; ++t) combined[t] = g.concat_vec(fstates[t], bstates[t]);
    std::vector<NodeId> passage_rows(combined.begin() + m + 1, combined.end());
    std::vector<NodeId> question_rows(combined.begin(), combined.begin() + m);
    return EncoderNodes{g.stack_rows(passage_rows), g.stack_rows(question_rows)};
  }

  NodeId pos = g.input(sinusoid_positions(total, cfg.embed));
  NodeId xp = g.add(x_all, pos);
  NodeId q = g.matmul(xp, bound["enc.attn.wq"]);
  NodeId k = g.matmul(xp, bound["enc.attn.wk"]);
  NodeId v = g.matmul(xp, bound["enc.attn.wv"]);
  NodeId scores = g.scale(g.matmul(q, g.transpose(k)), 1.0 / std::sqrt(double(cfg.d)));
  std::vector<NodeId> attn_rows(total);
  for (std::size_t t = 0; t < total; ++t)
    attn_rows[t] = g.masked_softmax(g.reshape(g.gather(scores, {t}, GatherAxis::rows), {total}));
  NodeId ctx = g.matmul(g.stack_rows(attn_rows), v);
  NodeId mixed = g.tanh(g.add(ctx, g.matmul(xp, bound["enc.attn.wproj"])));
  return EncoderNodes{g.gather(mixed, passage_pos, GatherAxis::rows),
                      g.gather(mixed, question_pos, GatherAxis::rows)};
}

EncoderOutput encode(const std::vector<TokenId>& question, const std::vector<TokenId>& passage,
                     const ParameterSet& params, const EncoderConfig& cfg) {
  Graph g;
  Bound bound = Bound::bind(g, params, /*track_grad=*/false);
  EncoderNodes nodes = encode_nodes(g, question, passage, bound, cfg);
  EncoderOutput out{g.value(nodes.H), g.value(nodes.H_Q)};
  if (!out.H.all_finite() || !out.H_Q.all_finite())
    fail(ErrorCode::numeric, "encode: non-finite representation");
  return out;
}

}  // namespace mapspan
