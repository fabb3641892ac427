#pragma once

// Token and label vocabularies. Tokens are lowercased whitespace splits with
// digit-only tokens masked to "#". Labels are ordered by descending training
// frequency, ties ascending-lexicographic; the end-of-sequence label takes
// the last id.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seq2label {

inline bool is_digits_only(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s)
    if (!std::isdigit(c)) return false;
  return true;
}

// lowercase, split on whitespace, digit-only tokens -> "#"
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    if (is_digits_only(cur)) {
      out.emplace_back("#");
    } else {
      for (char& c : cur) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(cur);
    }
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c)))
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

struct Vocabulary {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kNum = 2;  // rendered "#"
  static constexpr std::int32_t kBos = 3;
  static constexpr std::int32_t kEos = 4;
  static constexpr std::int32_t kReserved = 5;

  std::vector<std::string> id_to_token{"<pad>", "UNK", "#", "<bos>", "<eos>"};
  std::unordered_map<std::string, std::int32_t> token_to_id;

  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token.size()); }

  std::int32_t encode_token(std::string_view tok) const {
    if (tok == "#") return kNum;
    auto it = token_to_id.find(std::string(tok));
    return it == token_to_id.end() ? kUnk : it->second;
  }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const {
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(encode_token(t));
    return ids;
  }

  const std::string& decode(std::int32_t id) const {
    if (id < 0 || id >= size())
      throw std::invalid_argument("vocab: id " + std::to_string(id) + " out of range");
    return id_to_token[static_cast<std::size_t>(id)];
  }
};

// Top (cap - 5) tokens by frequency; ties broken ascending-lexicographic.
inline Vocabulary build_vocab(const std::vector<std::string>& texts, std::int32_t cap) {
  if (cap < 6)
    throw std::invalid_argument("build_vocab: cap must be at least 6, got " +
                                std::to_string(cap));
  if (texts.empty()) throw std::invalid_argument("build_vocab: no training texts");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& text : texts)
    for (auto& tok : tokenize(text))
      if (tok != "#") ++counts[tok];
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  const std::size_t keep =
      std::min(ranked.size(), static_cast<std::size_t>(cap - Vocabulary::kReserved));
  for (std::size_t i = 0; i < keep; ++i) {
    v.token_to_id.emplace(ranked[i].first, v.size());
    v.id_to_token.push_back(ranked[i].first);
  }
  return v;
}

struct LabelVocabulary {
  std::vector<std::string> id_to_label;  // descending training frequency
  std::vector<std::int64_t> counts;      // aligned with id_to_label
  std::unordered_map<std::string, std::int32_t> label_to_id;

  std::int32_t num_labels() const { return static_cast<std::int32_t>(id_to_label.size()); }
  std::int32_t eos_id() const { return num_labels(); }
  std::int32_t bos_id() const { return num_labels() + 1; }  // decoder input only

  std::int32_t lookup(std::string_view label) const {
    auto it = label_to_id.find(std::string(label));
    return it == label_to_id.end() ? -1 : it->second;
  }
};

inline LabelVocabulary permute_labels(const std::map<std::string, std::int64_t>& counts) {
  if (counts.empty()) throw std::invalid_argument("permute_labels: empty label set");
  for (const auto& [name, c] : counts)
    if (c < 1)
      throw std::invalid_argument("permute_labels: label '" + name +
                                  "' has count " + std::to_string(c));
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  LabelVocabulary lv;
  for (const auto& [name, c] : ranked) {
    lv.label_to_id.emplace(name, lv.num_labels());
    lv.id_to_label.push_back(name);
    lv.counts.push_back(c);
  }
  return lv;
}

}  // namespace seq2label
