#pragma once

// Flat key-value config files (`key = value`, `#` comments) and the merged
// run configuration. Unknown keys are errors; there are no silent defaults
// for misspelled keys. Writing emits every key so a resolved config file
// reproduces the run exactly.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2label/decoder.hpp"
#include "seq2label/mdc.hpp"
#include "seq2label/synthetic.hpp"

namespace seq2label {

using KvMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline KvMap read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  KvMap kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `key = value`");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate key '" +
                               key + "'");
  }
  return kv;
}

inline void write_kv_file(const std::string& path, const KvMap& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

namespace detail {

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::int64_t out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' needs a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: key '" + key + "' needs true/false, got '" + v + "'");
}

inline std::vector<int> parse_int_csv(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int(key, trim(item))));
  if (out.empty())
    throw std::runtime_error("config: key '" + key + "' needs a comma-separated list");
  return out;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_int_csv(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

// Merged configuration for train/ablate runs: corpus paths, model shape,
// and optimizer settings.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;

  std::int64_t vocab_cap = 50000;
  std::int64_t max_len = 500;
  std::int64_t embed_dim = 512;
  std::int64_t hidden_dim = 512;

  std::string attention_variant = "hybrid";
  std::int64_t kernel_size = 3;
  std::vector<int> dilation_rates{1, 2, 3};
  std::int64_t hier = 0;
  bool mask_emitted = true;

  std::int64_t batch_size = 64;
  double base_lr = 0.0003;
  double clip = 10.0;
  std::int64_t epochs = 10;
  std::uint64_t seed = 1;
  std::string precision = "float32";
  std::int64_t ablate_jobs = 1;

  static RunConfig from_kv(const KvMap& kv) {
    RunConfig c;
    std::set<std::string> known;
    auto has = [&](const char* key) {
      known.insert(key);
      return kv.count(key) > 0;
    };
    auto str = [&](const char* key, std::string& into) {
      if (has(key)) into = kv.at(key);
    };
    auto integer = [&](const char* key, std::int64_t& into) {
      if (has(key)) into = detail::parse_int(key, kv.at(key));
    };
    auto real = [&](const char* key, double& into) {
      if (has(key)) into = detail::parse_real(key, kv.at(key));
    };
    str("train_path", c.train_path);
    str("dev_path", c.dev_path);
    str("test_path", c.test_path);
    integer("vocab_cap", c.vocab_cap);
    integer("max_len", c.max_len);
    integer("embed_dim", c.embed_dim);
    integer("hidden_dim", c.hidden_dim);
    str("attention_variant", c.attention_variant);
    integer("kernel_size", c.kernel_size);
    if (has("dilation_rates"))
      c.dilation_rates = detail::parse_int_csv("dilation_rates", kv.at("dilation_rates"));
    integer("hier", c.hier);
    if (has("mask_emitted")) c.mask_emitted = detail::parse_bool("mask_emitted", kv.at("mask_emitted"));
    integer("batch_size", c.batch_size);
    real("base_lr", c.base_lr);
    real("clip", c.clip);
    integer("epochs", c.epochs);
    if (has("seed"))
      c.seed = static_cast<std::uint64_t>(detail::parse_int("seed", kv.at("seed")));
    str("precision", c.precision);
    integer("ablate_jobs", c.ablate_jobs);
    for (const auto& [key, value] : kv)
      if (!known.count(key))
        throw std::runtime_error("config: unknown key '" + key + "'");
    return c;
  }

  KvMap to_kv() const {
    KvMap kv;
    kv["train_path"] = train_path;
    kv["dev_path"] = dev_path;
    kv["test_path"] = test_path;
    kv["vocab_cap"] = std::to_string(vocab_cap);
    kv["max_len"] = std::to_string(max_len);
    kv["embed_dim"] = std::to_string(embed_dim);
    kv["hidden_dim"] = std::to_string(hidden_dim);
    kv["attention_variant"] = attention_variant;
    kv["kernel_size"] = std::to_string(kernel_size);
    kv["dilation_rates"] = detail::format_int_csv(dilation_rates);
    kv["hier"] = std::to_string(hier);
    kv["mask_emitted"] = mask_emitted ? "true" : "false";
    kv["batch_size"] = std::to_string(batch_size);
    kv["base_lr"] = detail::format_real(base_lr);
    kv["clip"] = detail::format_real(clip);
    kv["epochs"] = std::to_string(epochs);
    kv["seed"] = std::to_string(seed);
    kv["precision"] = precision;
    kv["ablate_jobs"] = std::to_string(ablate_jobs);
    return kv;
  }

  void validate_for_training() const {
    parse_variant(attention_variant);  // throws on bad name
    if (precision != "float32" && precision != "float64")
      throw std::runtime_error("config: precision must be float32 or float64");
    if (train_path.empty() || dev_path.empty())
      throw std::runtime_error("config: train_path and dev_path are required");
    if (vocab_cap < 6 || max_len < 1 || embed_dim < 1 || hidden_dim < 1 ||
        batch_size < 1 || epochs < 1 || clip <= 0 || base_lr <= 0 || ablate_jobs < 1)
      throw std::runtime_error("config: all sizes and rates must be positive");
    if (hier < 0) throw std::runtime_error("config: hier must be >= 0");
    if (hier == 0) {
      const auto schedule =
          validate_schedule(static_cast<int>(kernel_size), dilation_rates);
      if (!schedule.accepted)
        throw std::runtime_error("dilation schedule rejected: " + schedule_str(schedule) +
                                 " (M_2 = " + std::to_string(schedule.m_seq[1]) +
                                 " > K = " + std::to_string(kernel_size) + ")");
    }
  }
};

inline GenConfig gen_config_from_kv(const KvMap& kv) {
  GenConfig c;
  std::set<std::string> known;
  auto integer = [&](const char* key, std::int64_t& into) {
    known.insert(key);
    if (kv.count(key)) into = detail::parse_int(key, kv.at(key));
  };
  auto real = [&](const char* key, double& into) {
    known.insert(key);
    if (kv.count(key)) into = detail::parse_real(key, kv.at(key));
  };
  integer("topics", c.topics);
  integer("phrases_per_topic", c.phrases_per_topic);
  integer("phrase_len_min", c.phrase_len_min);
  integer("phrase_len_max", c.phrase_len_max);
  real("noise_rate", c.noise_rate);
  integer("doc_len_min", c.doc_len_min);
  integer("doc_len_max", c.doc_len_max);
  integer("corpus_size", c.corpus_size);
  real("decay", c.decay);
  for (const auto& [key, value] : kv)
    if (!known.count(key)) throw std::runtime_error("config: unknown key '" + key + "'");
  return c;
}

inline KvMap gen_config_to_kv(const GenConfig& c) {
  KvMap kv;
  kv["topics"] = std::to_string(c.topics);
  kv["phrases_per_topic"] = std::to_string(c.phrases_per_topic);
  kv["phrase_len_min"] = std::to_string(c.phrase_len_min);
  kv["phrase_len_max"] = std::to_string(c.phrase_len_max);
  kv["noise_rate"] = detail::format_real(c.noise_rate);
  kv["doc_len_min"] = std::to_string(c.doc_len_min);
  kv["doc_len_max"] = std::to_string(c.doc_len_max);
  kv["corpus_size"] = std::to_string(c.corpus_size);
  kv["decay"] = detail::format_real(c.decay);
  return kv;
}

}  // namespace seq2label
