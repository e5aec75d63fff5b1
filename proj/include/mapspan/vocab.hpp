#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mapspan/error.hpp"

namespace mapspan {

using TokenId = std::uint32_t;

// Dense token -> id map with fixed reserved ids at the front.
class Vocabulary {
 public:
  static constexpr TokenId pad_id = 0;
  static constexpr TokenId unk_id = 1;
  static constexpr TokenId sep_id = 2;

  Vocabulary() {
    add("<pad>");
    add("<unk>");
    add("<sep>");
  }

  TokenId add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const TokenId id = static_cast<TokenId>(tokens_.size());
    index_[token] = id;
    tokens_.push_back(token);
    return id;
  }

  TokenId id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unk_id : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size())
      fail(ErrorCode::vocabulary, "token id " + std::to_string(id) + " out of range [0, " +
                                      std::to_string(tokens_.size()) + ")");
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }

  std::vector<TokenId> ids_of(const std::vector<std::string>& tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id_of(t));
    return ids;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> index_;
};

}  // namespace mapspan
