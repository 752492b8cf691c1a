#pragma once

#include "logxai/encoder/config.hpp"
#include "logxai/errors.hpp"
#include "logxai/logcore.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace logxai::encoder {

inline constexpr std::string_view bos_token = "<s>";
inline constexpr std::string_view eos_token = "</s>";
inline constexpr std::string_view pad_token = "<pad>";
inline constexpr std::string_view unk_token = "<unk>";

inline constexpr int bos_id = 0;
inline constexpr int eos_id = 1;
inline constexpr int pad_id = 2;
inline constexpr int unk_id = 3;
inline constexpr std::size_t num_special = 4;

class Vocabulary {
public:
  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  /// `words` are the non-special entries in ID order, starting at ID 4.
  explicit Vocabulary(const std::vector<std::string>& words) {
    for (auto s : {bos_token, eos_token, pad_token, unk_token}) add(std::string(s));
    for (const auto& w : words) {
      if (token_to_id_.contains(w))
        throw ArgumentError("duplicate vocabulary entry '" + w + "'");
      add(w);
    }
  }

  std::size_t size() const noexcept { return id_to_token_.size(); }

  int id(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? unk_id : it->second;
  }

  bool contains(std::string_view token) const {
    return token_to_id_.contains(std::string(token));
  }

  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }

  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

private:
  void add(std::string w) {
    token_to_id_.emplace(w, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(std::move(w));
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

/// Frequency-ranked word vocabulary over normalized training text; ties are
/// broken lexicographically.
inline Vocabulary build_vocab(const std::vector<LogRecord>& train_records,
                              const EncoderConfig& config) {
  if (train_records.empty()) throw ArgumentError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : train_records)
    for (auto& w : split_words(r.normalized_text)) ++counts[std::move(w)];
  for (auto s : {bos_token, eos_token, pad_token, unk_token}) counts.erase(std::string(s));

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), config.vocab_max - num_special);
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(std::move(ranked[i].first));
  return Vocabulary(words);
}

struct TokenizedText {
  std::vector<int> ids;
  std::vector<std::string> tokens;
};

/// <s> words... </s>, truncated to max_seq_len with both sentinels kept.
inline TokenizedText tokenize(std::string_view text, const Vocabulary& vocab,
                              std::size_t max_seq_len) {
  TokenizedText out;
  const auto words = split_words(text);
  const std::size_t room = max_seq_len >= 2 ? max_seq_len - 2 : 0;
  const std::size_t n = std::min(words.size(), room);
  out.ids.reserve(n + 2);
  out.tokens.reserve(n + 2);
  out.ids.push_back(bos_id);
  out.tokens.emplace_back(bos_token);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = vocab.id(words[i]);
    out.ids.push_back(id);
    out.tokens.push_back(id == unk_id ? std::string(unk_token) : words[i]);
  }
  out.ids.push_back(eos_id);
  out.tokens.emplace_back(eos_token);
  return out;
}

} // namespace logxai::encoder
