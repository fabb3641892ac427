#pragma once

// Corpus records, encoded examples, and length-bucketed batching. The corpus
// file format is line-delimited JSON objects with `text` (whitespace
// tokenizable string) and `labels` (array of strings).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "seq2label/common.hpp"
#include "seq2label/vocab.hpp"

namespace seq2label {

struct RawRecord {
  std::string text;
  std::vector<std::string> labels;
};

inline std::vector<RawRecord> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad corpus record: " + e.what());
    }
    if (!j.contains("text") || !j.contains("labels"))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": record needs `text` and `labels`");
    RawRecord r;
    r.text = j["text"].get<std::string>();
    for (const auto& l : j["labels"]) r.labels.push_back(l.get<std::string>());
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_corpus(const std::string& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["text"] = r.text;
    j["labels"] = r.labels;
    out << j.dump() << '\n';
  }
}

// Token ids plus gold label ids sorted ascending (= descending training
// frequency) and terminated by the EOS label id.
struct Example {
  std::vector<std::int32_t> tokens;
  std::vector<std::int32_t> labels;
};

inline thread_local std::uint64_t g_skipped_no_labels = 0;

// nullopt is the skip marker: overlong text, or no known labels.
inline std::optional<Example> encode_example(const std::string& text,
                                             const std::vector<std::string>& labels,
                                             const Vocabulary& vocab,
                                             const LabelVocabulary& lvocab,
                                             std::size_t max_len = 500) {
  auto tokens = tokenize(text);
  if (tokens.empty())
    throw std::invalid_argument("encode_example: text has no tokens");
  if (tokens.size() > max_len) return std::nullopt;
  std::set<std::int32_t> ids;
  for (const auto& l : labels) {
    const std::int32_t id = lvocab.lookup(l);
    if (id >= 0) ids.insert(id);
  }
  if (ids.empty()) {
    ++g_skipped_no_labels;
    return std::nullopt;
  }
  Example ex;
  ex.tokens = vocab.encode(tokens);
  ex.labels.assign(ids.begin(), ids.end());
  ex.labels.push_back(lvocab.eos_id());
  return ex;
}

struct Batch {
  Dim size = 0;
  Dim max_tokens = 0;
  Dim max_labels = 0;
  std::vector<std::int32_t> tokens;     // [size, max_tokens], PAD past length
  std::vector<std::int32_t> token_len;  // true lengths
  std::vector<std::int32_t> labels;     // [size, max_labels], -1 past length
  std::vector<std::int32_t> label_len;

  const std::int32_t* token_row(Dim i) const { return tokens.data() + i * max_tokens; }
  const std::int32_t* label_row(Dim i) const { return labels.data() + i * max_labels; }
};

// Buckets examples by length (stable sort), chunks into batches, and shuffles
// batch order with the given seed. Every example appears exactly once.
inline std::vector<Batch> make_batches(const std::vector<Example>& examples,
                                       Dim batch_size, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("make_batches: no examples");
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch size < 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].tokens.size() < examples[b].tokens.size();
  });
  const std::size_t n_batches =
      (order.size() + static_cast<std::size_t>(batch_size) - 1) /
      static_cast<std::size_t>(batch_size);
  std::vector<std::size_t> batch_order(n_batches);
  for (std::size_t i = 0; i < n_batches; ++i) batch_order[i] = i;
  Rng rng(seed);
  rng.shuffle(batch_order);

  std::vector<Batch> out;
  out.reserve(n_batches);
  for (std::size_t bi : batch_order) {
    const std::size_t lo = bi * static_cast<std::size_t>(batch_size);
    const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(batch_size));
    Batch b;
    b.size = static_cast<Dim>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const Example& ex = examples[order[i]];
      b.max_tokens = std::max(b.max_tokens, static_cast<Dim>(ex.tokens.size()));
      b.max_labels = std::max(b.max_labels, static_cast<Dim>(ex.labels.size()));
    }
    b.tokens.assign(static_cast<std::size_t>(b.size * b.max_tokens), Vocabulary::kPad);
    b.labels.assign(static_cast<std::size_t>(b.size * b.max_labels), -1);
    for (std::size_t i = lo; i < hi; ++i) {
      const Example& ex = examples[order[i]];
      const Dim row = static_cast<Dim>(i - lo);
      std::copy(ex.tokens.begin(), ex.tokens.end(),
                b.tokens.begin() + row * b.max_tokens);
      std::copy(ex.labels.begin(), ex.labels.end(),
                b.labels.begin() + row * b.max_labels);
      b.token_len.push_back(static_cast<std::int32_t>(ex.tokens.size()));
      b.label_len.push_back(static_cast<std::int32_t>(ex.labels.size()));
    }
    out.push_back(std::move(b));
  }
  return out;
}

// Counts each label's occurrences across the training records.
inline std::map<std::string, std::int64_t> count_labels(const std::vector<RawRecord>& records) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& r : records)
    for (const auto& l : r.labels) ++counts[l];
  return counts;
}

inline std::vector<std::string> all_texts(const std::vector<RawRecord>& records) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.text);
  return texts;
}

inline std::vector<Example> encode_corpus(const std::vector<RawRecord>& records,
                                          const Vocabulary& vocab,
                                          const LabelVocabulary& lvocab,
                                          std::size_t max_len = 500) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (auto ex = encode_example(r.text, r.labels, vocab, lvocab, max_len))
      out.push_back(std::move(*ex));
  return out;
}

}  // namespace seq2label
