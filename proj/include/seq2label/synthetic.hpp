#pragma once

// Synthetic planted-phrase corpus. Each topic owns a private sub-vocabulary
// and a few signature phrases; a document samples 1-4 topics from a
// geometric-decay marginal (long tail), embeds at least one full signature
// phrase per active topic, and fills the rest with noise tokens and extra
// phrase copies. Deterministic per seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2label/common.hpp"
#include "seq2label/corpus.hpp"

namespace seq2label {

struct GenConfig {
  std::int64_t topics = 20;
  std::int64_t phrases_per_topic = 3;
  std::int64_t phrase_len_min = 3;
  std::int64_t phrase_len_max = 5;
  double noise_rate = 0.8;  // share of free capacity spent on noise tokens
  std::int64_t doc_len_min = 30;
  std::int64_t doc_len_max = 80;
  std::int64_t corpus_size = 2500;
  double decay = 0.85;  // geometric decay of topic frequency
};

inline void validate_gen_config(const GenConfig& c) {
  if (c.topics < 2)
    throw std::invalid_argument("gencorpus: need at least 2 topics, got " +
                                std::to_string(c.topics));
  if (c.phrases_per_topic < 1) throw std::invalid_argument("gencorpus: phrases_per_topic < 1");
  if (c.phrase_len_min < 1 || c.phrase_len_max < c.phrase_len_min)
    throw std::invalid_argument("gencorpus: bad phrase length range");
  if (c.doc_len_min < c.phrase_len_max)
    throw std::invalid_argument(
        "gencorpus: document length below longest signature phrase (" +
        std::to_string(c.doc_len_min) + " < " + std::to_string(c.phrase_len_max) + ")");
  if (c.doc_len_max < c.doc_len_min) throw std::invalid_argument("gencorpus: bad doc length range");
  if (c.noise_rate < 0.0 || c.noise_rate >= 1.0)
    throw std::invalid_argument("gencorpus: noise_rate must be in [0,1)");
  if (c.corpus_size < 1) throw std::invalid_argument("gencorpus: corpus_size < 1");
  if (c.decay <= 0.0 || c.decay > 1.0)
    throw std::invalid_argument("gencorpus: decay must be in (0,1]");
}

struct SyntheticCorpus {
  std::vector<RawRecord> records;
  // topic_phrases[t] holds topic t's signature phrases, space-joined
  std::vector<std::vector<std::string>> topic_phrases;
  std::vector<std::string> topic_names;
};

namespace detail {
inline std::string topic_name(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "topic%02lld", static_cast<long long>(i));
  return buf;
}
inline std::string topic_word(std::int64_t t, std::int64_t w) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t%02lldw%02lld", static_cast<long long>(t),
                static_cast<long long>(w));
  return buf;
}
inline std::string noise_word(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%03lld", static_cast<long long>(i));
  return buf;
}
}  // namespace detail

inline SyntheticCorpus generate_synthetic(const GenConfig& cfg, std::uint64_t seed) {
  validate_gen_config(cfg);
  Rng rng(derive_seed(seed, "generation"));

  // topic-private pools and signature phrases (as token index sequences)
  const std::int64_t pool_size =
      std::max<std::int64_t>(cfg.phrase_len_max * 2, cfg.phrases_per_topic + cfg.phrase_len_max);
  SyntheticCorpus out;
  std::vector<std::vector<std::vector<std::string>>> phrases(cfg.topics);
  for (std::int64_t t = 0; t < cfg.topics; ++t) {
    out.topic_names.push_back(detail::topic_name(t));
    std::set<std::vector<std::string>> seen;
    std::vector<std::vector<std::string>> plist;
    while (static_cast<std::int64_t>(plist.size()) < cfg.phrases_per_topic) {
      const std::int64_t len = rng.uniform_int(cfg.phrase_len_min, cfg.phrase_len_max);
      std::vector<std::string> phrase;
      for (std::int64_t i = 0; i < len; ++i)
        phrase.push_back(detail::topic_word(t, rng.uniform_int(0, pool_size - 1)));
      if (seen.insert(phrase).second) plist.push_back(std::move(phrase));
    }
    phrases[t] = std::move(plist);
  }
  out.topic_phrases.resize(cfg.topics);
  for (std::int64_t t = 0; t < cfg.topics; ++t)
    for (const auto& p : phrases[t]) {
      std::string joined;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) joined += ' ';
        joined += p[i];
      }
      out.topic_phrases[t].push_back(joined);
    }

  const std::int64_t noise_vocab = std::max<std::int64_t>(100, cfg.topics * 10);
  std::vector<double> weights(cfg.topics);
  for (std::int64_t t = 0; t < cfg.topics; ++t)
    weights[t] = std::pow(cfg.decay, static_cast<double>(t));

  for (std::int64_t d = 0; d < cfg.corpus_size; ++d) {
    // weighted sample of 1-4 distinct topics
    const std::int64_t n_active =
        rng.uniform_int(1, std::min<std::int64_t>(4, cfg.topics));
    std::vector<double> w = weights;
    std::vector<std::int64_t> active;
    for (std::int64_t pick = 0; pick < n_active; ++pick) {
      double total = 0;
      for (double x : w) total += x;
      double r = rng.next_unit() * total;
      std::int64_t chosen = cfg.topics - 1;
      for (std::int64_t t = 0; t < cfg.topics; ++t) {
        if (w[t] <= 0) continue;
        if (r < w[t]) {
          chosen = t;
          break;
        }
        r -= w[t];
      }
      active.push_back(chosen);
      w[chosen] = 0;
    }
    std::sort(active.begin(), active.end());

    std::int64_t doc_len = rng.uniform_int(cfg.doc_len_min, cfg.doc_len_max);
    std::vector<const std::vector<std::string>*> blocks;
    std::int64_t used = 0;
    for (std::int64_t t : active) {
      const auto& p = phrases[t][static_cast<std::size_t>(
          rng.uniform_int(0, cfg.phrases_per_topic - 1))];
      blocks.push_back(&p);
      used += static_cast<std::int64_t>(p.size());
    }
    if (doc_len < used) doc_len = used;  // mandatory phrases always fit

    // split free capacity: (1 - noise_rate) to extra phrase copies, rest noise
    std::int64_t extra = static_cast<std::int64_t>(
        std::llround((1.0 - cfg.noise_rate) * static_cast<double>(doc_len - used)));
    while (extra >= cfg.phrase_len_min) {
      const std::int64_t t = active[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(active.size()) - 1))];
      const auto& p = phrases[t][static_cast<std::size_t>(
          rng.uniform_int(0, cfg.phrases_per_topic - 1))];
      if (static_cast<std::int64_t>(p.size()) > extra) break;
      blocks.push_back(&p);
      used += static_cast<std::int64_t>(p.size());
      extra -= static_cast<std::int64_t>(p.size());
    }

    // items = phrase blocks + single noise tokens, shuffled
    const std::int64_t n_noise = doc_len - used;
    std::vector<std::string> noise;
    noise.reserve(static_cast<std::size_t>(n_noise));
    for (std::int64_t i = 0; i < n_noise; ++i)
      noise.push_back(detail::noise_word(rng.uniform_int(0, noise_vocab - 1)));
    struct Item {
      const std::vector<std::string>* block;
      const std::string* single;
    };
    std::vector<Item> items;
    items.reserve(blocks.size() + noise.size());
    for (const auto* b : blocks) items.push_back({b, nullptr});
    for (const auto& s : noise) items.push_back({nullptr, &s});
    rng.shuffle(items);

    RawRecord rec;
    std::string text;
    for (const auto& it : items) {
      if (it.block) {
        for (const auto& tok : *it.block) {
          if (!text.empty()) text += ' ';
          text += tok;
        }
      } else {
        if (!text.empty()) text += ' ';
        text += *it.single;
      }
    }
    rec.text = std::move(text);
    for (std::int64_t t : active) rec.labels.push_back(detail::topic_name(t));
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace seq2label
