#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxvid/autodiff.hpp"

namespace toxvid {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kSepId = 2;
inline constexpr std::size_t kReservedTokens = 3;

/// Lowercase (ASCII) and split on whitespace.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class Vocabulary {
 public:
  Vocabulary() : tokens_{"[PAD]", "[UNK]", "[SEP]"} { reindex(); }

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < kReservedTokens || tokens_[kPadId] != "[PAD]" || tokens_[kUnkId] != "[UNK]" ||
        tokens_[kSepId] != "[SEP]") {
      throw std::invalid_argument("Vocabulary: reserved tokens must occupy ids 0-2");
    }
    reindex();
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::size_t id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnkId : it->second;
  }
  bool contains(std::string_view token) const { return ids_.contains(std::string(token)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error(path.string() + ": cannot open vocabulary for writing");
    for (const auto& t : tokens_) f << t << '\n';
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path.string() + ": cannot open vocabulary");
    std::vector<std::string> tokens;
    for (std::string line; std::getline(f, line);) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void reindex() {
    ids_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!ids_.emplace(tokens_[i], i).second) throw std::invalid_argument("Vocabulary: duplicate token " + tokens_[i]);
    }
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Frequency-ranked vocabulary (ties broken lexicographically), capped at
/// max_size entries including the three reserved ids.
inline Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size) {
  if (max_size < 4) throw std::invalid_argument("build_vocab: max_size must be >= 4");
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& line : corpus)
    for (auto& w : split_words(line)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{"[PAD]", "[UNK]", "[SEP]"};
  for (const auto& [w, n] : ranked) {
    if (tokens.size() >= max_size) break;
    if (w == "[pad]" || w == "[unk]" || w == "[sep]") continue;
    tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens));
}

struct TokenizedText {
  std::vector<std::size_t> ids;
  RowMask mask;
};

/// Right-padded to exactly `max_len` ids. An empty transcript becomes one UNK.
inline TokenizedText tokenize(std::string_view transcript, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("tokenize: max_len must be >= 1");
  auto words = split_words(transcript);
  TokenizedText out;
  out.ids.assign(max_len, kPadId);
  out.mask.assign(max_len, 0);
  if (words.empty()) {
    out.ids[0] = kUnkId;
    out.mask[0] = 1;
    return out;
  }
  const std::size_t n = std::min(words.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    out.ids[i] = vocab.id(words[i]);
    out.mask[i] = 1;
  }
  return out;
}

template <typename T>
struct TextEmbeddings {
  ad::Var<T> embeddings;  // SL_t x d_t
  RowMask mask;
};

template <typename T>
TextEmbeddings<T> embed_text(const TokenizedText& tokens, const ad::Var<T>& table) {
  if (tokens.ids.size() != tokens.mask.size()) throw ShapeError("embed_text: ids/mask length mismatch");
  if (std::none_of(tokens.mask.begin(), tokens.mask.end(), [](auto m) { return m != 0; })) {
    throw std::invalid_argument("embed_text: no unmasked token");
  }
  return {ad::embedding_lookup<T>(table, tokens.ids), tokens.mask};
}

}  // namespace toxvid
