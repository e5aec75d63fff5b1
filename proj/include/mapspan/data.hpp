#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mapspan/error.hpp"

namespace mapspan {

// Inclusive token positions of an answer span.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct QAExample {
  std::string id;
  std::vector<std::string> passage_tokens;
  std::vector<std::string> question_tokens;
  std::vector<TokenSpan> gold_spans;      // nonempty, aligned with gold_texts
  std::vector<std::string> gold_texts;
  // Present for examples loaded from raw text: the original passage and the
  // [begin, end) character range of each passage token, so prediction text
  // can be cut from the source rather than re-joined from tokens.
  std::string context;
  std::vector<std::pair<std::size_t, std::size_t>> token_offsets;
};

// Passage substring (or token join, for synthetic data) covering tokens
// s..e inclusive.
std::string prediction_text(const QAExample& ex, std::size_t s, std::size_t e);

struct Token {
  std::string text;
  std::size_t begin = 0;  // character offsets, [begin, end)
  std::size_t end = 0;
};

// Whitespace-plus-punctuation split: runs of word characters form one token,
// each ASCII punctuation character stands alone, whitespace separates.
// Bytes outside ASCII are treated as word characters.
std::vector<Token> tokenize_with_offsets(const std::string& text);
std::vector<std::string> split_whitespace(const std::string& text);

struct NeedleConfig {
  std::size_t num_examples = 1000;
  std::size_t passage_lo = 20, passage_hi = 40;
  std::size_t needle_lo = 1, needle_hi = 5;
  std::size_t vocab_size = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

// Synthetic span-extraction task: the question is a token subsequence (the
// needle) planted at exactly one position of a random passage; the gold span
// is where it sits.
std::vector<QAExample> generate_needle_task(const NeedleConfig& cfg);

void save_jsonl(const std::vector<QAExample>& examples, const std::string& path);
std::vector<QAExample> load_jsonl(const std::string& path);

struct SquadLoadResult {
  std::vector<QAExample> examples;
  std::size_t raw_questions = 0;  // question entries in the file
  std::size_t dropped = 0;        // entries with no token-aligned answer span
  std::size_t aligned = 0;        // entries whose span text round-trips to a gold answer
};

SquadLoadResult load_squad(const std::string& path);

}  // namespace mapspan
