#pragma once

#include <map>
#include <string>
#include <vector>

#include "mapspan/data.hpp"

namespace mapspan {

// SQuAD answer normalization: lowercase, drop ASCII punctuation, drop the
// articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

// 1 iff the normalized prediction equals any normalized gold.
int exact_match(const std::string& prediction, const std::vector<std::string>& golds);

// Token-overlap F1 on normalized texts, maximized over golds. Empty versus
// empty counts as 1, empty versus nonempty as 0.
double f1_score(const std::string& prediction, const std::vector<std::string>& golds);

struct LengthBin {
  std::size_t length = 0;  // gold answer token length; the last bin aggregates longer answers
  double em = 0.0;
  double f1 = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  double em = 0.0;  // percents
  double f1 = 0.0;
  std::size_t count = 0;
  std::vector<LengthBin> bins;
};

// Macro-averaged EM/F1 over the given prediction texts, with per-answer-length
// bins keyed by the shortest gold span, capped at bin_cap.
EvalReport evaluate(const std::map<std::string, std::string>& predictions,
                    const std::vector<QAExample>& data, std::size_t bin_cap = 10);

}  // namespace mapspan
