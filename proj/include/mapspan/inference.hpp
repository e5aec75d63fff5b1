#pragma once

#include <cstddef>
#include <vector>

#include "mapspan/heads.hpp"

namespace mapspan {

struct SpanPrediction {
  std::size_t s = 0;
  std::size_t e = 0;
  double score = 0.0;
  Direction direction = Direction::forward;
};

struct SearchConfig {
  std::size_t max_span_len = 0;  // 0 means unlimited
  std::size_t ensemble_k = 20;

  void validate() const;
  bool feasible(std::size_t i, std::size_t j) const {
    return i <= j && (max_span_len == 0 || j - i < max_span_len);
  }
};

// Best span under p_s[i] * p_e[j], i <= j within the length cap;
// ties prefer smaller i, then smaller j.
SpanPrediction search_vector(const ProbVector& p_s, const ProbVector& p_e,
                             const SearchConfig& cfg);

// Best span under the conditional factorization. Forward scores
// p_first[i] * P_cond[i][j]; backward conditions on the end instead, scoring
// p_first[j] * P_cond[j][i].
SpanPrediction search_matrix(const ProbVector& p_first, const ProbMatrix& P_cond,
                             Direction direction, const SearchConfig& cfg);

// The ensemble_k best feasible spans, descending score, same tie-break.
std::vector<SpanPrediction> top_k_pairs(const ProbVector& p_first, const ProbMatrix& P_cond,
                                        Direction direction, const SearchConfig& cfg);

// Drops from B every span whose position occurs in F, then returns the
// highest-scoring member of the union; ties prefer forward, then smaller span.
SpanPrediction ensemble(const std::vector<SpanPrediction>& F,
                        const std::vector<SpanPrediction>& B);

}  // namespace mapspan
