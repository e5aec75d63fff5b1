#include "mapspan/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "mapspan/metrics.hpp"
#include "mapspan/rng.hpp"

namespace mapspan {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t s, std::size_t e) {
  std::string out;
  for (std::size_t i = s; i <= e; ++i) {
    if (i > s) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join_all(const std::vector<std::string>& tokens) {
  return tokens.empty() ? std::string() : join_tokens(tokens, 0, tokens.size() - 1);
}

}  // namespace

std::string prediction_text(const QAExample& ex, std::size_t s, std::size_t e) {
  const std::size_t n = ex.passage_tokens.size();
  if (s > e || e >= n)
    fail(ErrorCode::index, "span (" + std::to_string(s) + ", " + std::to_string(e) +
                               ") out of range for passage of " + std::to_string(n) + " tokens");
  if (!ex.context.empty() && ex.token_offsets.size() == n) {
    const std::size_t begin = ex.token_offsets[s].first;
    const std::size_t end = ex.token_offsets[e].second;
    return ex.context.substr(begin, end - begin);
  }
  return join_tokens(ex.passage_tokens, s, e);
}

std::vector<Token> tokenize_with_offsets(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = text[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      tokens.push_back(Token{text.substr(i, j - i), i, j});
      i = j;
    } else {
      tokens.push_back(Token{text.substr(i, 1), i, i + 1});
      ++i;
    }
  }
  return tokens;
}

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void NeedleConfig::validate() const {
  if (num_examples < 1) fail(ErrorCode::invalid_argument, "need at least one example");
  if (vocab_size <= 2) fail(ErrorCode::invalid_argument, "vocabulary too small for a needle task");
  if (passage_lo < 1 || passage_lo > passage_hi || needle_lo < 1 || needle_lo > needle_hi)
    fail(ErrorCode::invalid_argument, "invalid length ranges");
  if (needle_hi > passage_lo)
    fail(ErrorCode::invalid_argument,
         "needle length range must fit every passage length: needle up to " +
             std::to_string(needle_hi) + " vs passage from " + std::to_string(passage_lo));
}

namespace {

std::vector<std::size_t> find_occurrences(const std::vector<std::size_t>& passage,
                                          const std::vector<std::size_t>& needle) {
  std::vector<std::size_t> hits;
  if (needle.size() > passage.size()) return hits;
  for (std::size_t p = 0; p + needle.size() <= passage.size(); ++p)
    if (std::equal(needle.begin(), needle.end(), passage.begin() + p)) hits.push_back(p);
  return hits;
}

}  // namespace

std::vector<QAExample> generate_needle_task(const NeedleConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<QAExample> out;
  out.reserve(cfg.num_examples);

  for (std::size_t idx = 0; idx < cfg.num_examples; ++idx) {
    const std::size_t plen = rng.range(cfg.passage_lo, cfg.passage_hi);
    const std::size_t nlen = rng.range(cfg.needle_lo, cfg.needle_hi);
    const std::size_t pos = rng.index(plen - nlen + 1);

    std::vector<std::size_t> passage(plen);
    for (auto& t : passage) t = rng.index(cfg.vocab_size);
    std::vector<std::size_t> needle(passage.begin() + pos, passage.begin() + pos + nlen);

    // The needle must occur exactly once; perturb one token of every stray
    // occurrence until the scan is clean.
    for (std::size_t attempt = 0;; ++attempt) {
      std::vector<std::size_t> hits = find_occurrences(passage, needle);
      if (hits.size() == 1 && hits[0] == pos) break;
      if (attempt > 10000)
        fail(ErrorCode::invalid_argument,
             "could not isolate a unique needle; enlarge the vocabulary");
      for (std::size_t h : hits) {
        if (h == pos) continue;
        for (std::size_t off = 0; off < nlen; ++off) {
          const std::size_t at = h + off;
          if (at < pos || at >= pos + nlen) {
            passage[at] = rng.index(cfg.vocab_size);
            break;
          }
        }
      }
    }

    QAExample ex;
    ex.id = "needle-" + std::to_string(idx);
    ex.passage_tokens.reserve(plen);
    for (std::size_t t : passage) ex.passage_tokens.push_back("w" + std::to_string(t));
    for (std::size_t t : needle) ex.question_tokens.push_back("w" + std::to_string(t));
    ex.gold_spans.push_back(TokenSpan{pos, pos + nlen - 1});
    ex.gold_texts.push_back(join_tokens(ex.passage_tokens, pos, pos + nlen - 1));
    out.push_back(std::move(ex));
  }
  return out;
}

void save_jsonl(const std::vector<QAExample>& examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  for (const auto& ex : examples) {
    nlohmann::json rec;
    rec["id"] = ex.id;
    rec["passage"] = join_all(ex.passage_tokens);
    rec["question"] = join_all(ex.question_tokens);
    nlohmann::json answers = nlohmann::json::array();
    for (std::size_t i = 0; i < ex.gold_spans.size(); ++i)
      answers.push_back({{"start", ex.gold_spans[i].start},
                         {"end", ex.gold_spans[i].end},
                         {"text", ex.gold_texts[i]}});
    rec["answers"] = std::move(answers);
    out << rec.dump() << '\n';
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path);
}

std::vector<QAExample> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path);
  std::vector<QAExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::parse, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    QAExample ex;
    try {
      ex.id = rec.at("id").get<std::string>();
      ex.passage_tokens = split_whitespace(rec.at("passage").get<std::string>());
      ex.question_tokens = split_whitespace(rec.at("question").get<std::string>());
      for (const auto& a : rec.at("answers")) {
        ex.gold_spans.push_back(
            TokenSpan{a.at("start").get<std::size_t>(), a.at("end").get<std::size_t>()});
        ex.gold_texts.push_back(a.at("text").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::schema, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (ex.gold_spans.empty())
      fail(ErrorCode::schema, path + ":" + std::to_string(lineno) + ": no answers");
    for (const auto& sp : ex.gold_spans)
      if (sp.start > sp.end || sp.end >= ex.passage_tokens.size())
        fail(ErrorCode::schema,
             path + ":" + std::to_string(lineno) + ": answer span out of range");
    out.push_back(std::move(ex));
  }
  return out;
}

SquadLoadResult load_squad(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, path + ": " + e.what());
  }

  SquadLoadResult result;
  try {
    for (const auto& article : root.at("data")) {
      for (const auto& paragraph : article.at("paragraphs")) {
        const std::string context = paragraph.at("context").get<std::string>();
        const std::vector<Token> tokens = tokenize_with_offsets(context);

        for (const auto& qa : paragraph.at("qas")) {
          ++result.raw_questions;
          QAExample ex;
          ex.id = qa.at("id").get<std::string>();
          ex.question_tokens.clear();
          for (const auto& t : tokenize_with_offsets(qa.at("question").get<std::string>()))
            ex.question_tokens.push_back(t.text);
          ex.context = context;
          for (const auto& t : tokens) {
            ex.passage_tokens.push_back(t.text);
            ex.token_offsets.emplace_back(t.begin, t.end);
          }

          bool any_round_trip = false;
          std::set<std::tuple<std::size_t, std::size_t, std::string>> seen;
          for (const auto& ans : qa.at("answers")) {
            const std::string text = ans.at("text").get<std::string>();
            const std::size_t a = ans.at("answer_start").get<std::size_t>();
            const std::size_t b = a + text.size();
            if (text.empty() || b > context.size()) continue;

            // Token span covering the character range.
            std::size_t first = tokens.size(), last = tokens.size();
            for (std::size_t t = 0; t < tokens.size(); ++t) {
              if (tokens[t].end > a && tokens[t].begin < b) {
                if (first == tokens.size()) first = t;
                last = t;
              }
            }
            if (first == tokens.size()) continue;

            const std::string covered =
                context.substr(tokens[first].begin, tokens[last].end - tokens[first].begin);
            if (normalize_answer(covered) == normalize_answer(text)) any_round_trip = true;

            if (seen.emplace(first, last, text).second) {
              ex.gold_spans.push_back(TokenSpan{first, last});
              ex.gold_texts.push_back(text);
            }
          }

          if (any_round_trip) ++result.aligned;
          if (ex.gold_spans.empty()) {
            ++result.dropped;
            continue;
          }
          result.examples.push_back(std::move(ex));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::schema, path + ": " + e.what());
  }
  return result;
}

}  // namespace mapspan
