#include "mapspan/inference.hpp"

#include <algorithm>
#include <set>

namespace mapspan {

void SearchConfig::validate() const {
  if (ensemble_k < 1) fail(ErrorCode::config, "ensemble_k must be at least 1");
}

namespace {

// "better" ordering: higher score first, then smaller start, then smaller end.
bool better(const SpanPrediction& a, const SpanPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.s != b.s) return a.s < b.s;
  return a.e < b.e;
}

double pair_score(const ProbVector& p_first, const ProbMatrix& P_cond, Direction direction,
                  std::size_t i, std::size_t j) {
  return direction == Direction::forward ? p_first[i] * P_cond.at(i, j)
                                         : p_first[j] * P_cond.at(j, i);
}

}  // namespace

SpanPrediction search_vector(const ProbVector& p_s, const ProbVector& p_e,
                             const SearchConfig& cfg) {
  cfg.validate();
  const std::size_t n = p_s.size();
  if (n == 0 || p_e.size() != n)
    fail(ErrorCode::dimension, "search_vector: vectors must be nonempty and equal length");
  SpanPrediction best{0, 0, -1.0, Direction::forward};
  for (std::size_t i = 0; i < n; ++i) {
    // For a fixed start the best end is the feasible max of p_e, but n is
    // small at inference; the direct scan doubles as the oracle's shape.
    for (std::size_t j = i; j < n && cfg.feasible(i, j); ++j) {
      SpanPrediction cand{i, j, p_s[i] * p_e[j], Direction::forward};
      if (best.score < 0.0 || better(cand, best)) best = cand;
    }
  }
  return best;
}

SpanPrediction search_matrix(const ProbVector& p_first, const ProbMatrix& P_cond,
                             Direction direction, const SearchConfig& cfg) {
  cfg.validate();
  const std::size_t n = p_first.size();
  if (P_cond.n != n) fail(ErrorCode::dimension, "search_matrix: dimension mismatch");
  SpanPrediction best{0, 0, -1.0, direction};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n && cfg.feasible(i, j); ++j) {
      SpanPrediction cand{i, j, pair_score(p_first, P_cond, direction, i, j), direction};
      if (best.score < 0.0 || better(cand, best)) best = cand;
    }
  return best;
}

std::vector<SpanPrediction> top_k_pairs(const ProbVector& p_first, const ProbMatrix& P_cond,
                                        Direction direction, const SearchConfig& cfg) {
  cfg.validate();
  const std::size_t n = p_first.size();
  if (P_cond.n != n) fail(ErrorCode::dimension, "top_k_pairs: dimension mismatch");
  std::vector<SpanPrediction> all;
  all.reserve(n * 4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n && cfg.feasible(i, j); ++j)
      all.push_back({i, j, pair_score(p_first, P_cond, direction, i, j), direction});
  std::sort(all.begin(), all.end(), better);
  if (all.size() > cfg.ensemble_k) all.resize(cfg.ensemble_k);
  return all;
}

SpanPrediction ensemble(const std::vector<SpanPrediction>& F,
                        const std::vector<SpanPrediction>& B) {
  if (F.empty()) fail(ErrorCode::invalid_argument, "ensemble: forward candidate list is empty");
  std::set<std::pair<std::size_t, std::size_t>> forward_spans;
  for (const auto& f : F) forward_spans.emplace(f.s, f.e);

  SpanPrediction best = F.front();
  for (const auto& f : F)
    if (better(f, best)) best = f;
  for (const auto& b : B) {
    if (forward_spans.count({b.s, b.e})) continue;
    // Equal scores keep the forward pick; a backward span wins only by a
    // strictly better score or a smaller position at the same score against
    // another backward candidate.
    if (b.score > best.score ||
        (b.score == best.score && best.direction == Direction::backward && better(b, best)))
      best = b;
  }
  return best;
}

}  // namespace mapspan
