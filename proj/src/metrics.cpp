#include "mapspan/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace mapspan {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Word characters in the sense of the article-boundary rule: ASCII
// alphanumerics plus any non-ASCII byte. Underscores are punctuation here
// and are already gone by the time articles are stripped.
bool is_boundary_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string strip_articles(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_boundary_word_byte(text[i])) {
      out += text[i];
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && is_boundary_word_byte(text[j])) ++j;
    const std::string word = text.substr(i, j - i);
    if (word == "a" || word == "an" || word == "the")
      out += ' ';
    else
      out += word;
    i = j;
  }
  return out;
}

std::vector<std::string> tokens_of(const std::string& normalized) {
  std::vector<std::string> toks;
  std::istringstream in(normalized);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::vector<std::string> rest = gold;
  std::size_t common = 0;
  for (const auto& t : pred) {
    auto it = std::find(rest.begin(), rest.end(), t);
    if (it != rest.end()) {
      rest.erase(it);
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = double(common) / double(pred.size());
  const double recall = double(common) / double(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (unsigned char c : text) lowered += char(std::tolower(c));

  std::string no_punct;
  no_punct.reserve(lowered.size());
  for (unsigned char c : lowered)
    if (!is_ascii_punct(c)) no_punct += char(c);

  std::string joined;
  for (const auto& t : tokens_of(strip_articles(no_punct))) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  return joined;
}

int exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
  if (golds.empty()) fail(ErrorCode::invalid_argument, "exact_match: no gold answers");
  const std::string p = normalize_answer(prediction);
  for (const auto& g : golds)
    if (p == normalize_answer(g)) return 1;
  return 0;
}

double f1_score(const std::string& prediction, const std::vector<std::string>& golds) {
  if (golds.empty()) fail(ErrorCode::invalid_argument, "f1_score: no gold answers");
  const std::vector<std::string> pred = tokens_of(normalize_answer(prediction));
  double best = 0.0;
  for (const auto& g : golds)
    best = std::max(best, f1_single(pred, tokens_of(normalize_answer(g))));
  return best;
}

EvalReport evaluate(const std::map<std::string, std::string>& predictions,
                    const std::vector<QAExample>& data, std::size_t bin_cap) {
  if (predictions.empty()) fail(ErrorCode::evaluation, "no predictions to evaluate");
  if (bin_cap < 1) fail(ErrorCode::evaluation, "bin cap must be at least 1");

  std::map<std::string, const QAExample*> by_id;
  for (const auto& ex : data) by_id[ex.id] = &ex;

  struct Acc {
    double em = 0.0, f1 = 0.0;
    std::size_t count = 0;
  };
  Acc total;
  std::map<std::size_t, Acc> bins;

  for (const auto& [id, text] : predictions) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorCode::evaluation, "prediction for unknown example: " + id);
    const QAExample& ex = *it->second;

    const double em = exact_match(text, ex.gold_texts);
    const double f1 = f1_score(text, ex.gold_texts);

    std::size_t shortest = ex.passage_tokens.size();
    for (const auto& sp : ex.gold_spans) shortest = std::min(shortest, sp.end - sp.start + 1);
    const std::size_t key = std::min(shortest, bin_cap);

    total.em += em;
    total.f1 += f1;
    ++total.count;
    Acc& b = bins[key];
    b.em += em;
    b.f1 += f1;
    ++b.count;
  }

  EvalReport report;
  report.count = total.count;
  report.em = 100.0 * total.em / double(total.count);
  report.f1 = 100.0 * total.f1 / double(total.count);
  for (const auto& [len, acc] : bins)
    report.bins.push_back(LengthBin{len, 100.0 * acc.em / double(acc.count),
                                    100.0 * acc.f1 / double(acc.count), acc.count});
  return report;
}

}  // namespace mapspan
