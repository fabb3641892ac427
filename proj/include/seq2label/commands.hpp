#pragma once

// The four commands behind the CLI: gencorpus, train, eval, ablate. Each
// writes its fully resolved configuration next to its outputs so a run can be
// reproduced bit for bit from the artifacts alone.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seq2label/checkpoint.hpp"
#include "seq2label/config.hpp"
#include "seq2label/corpus.hpp"
#include "seq2label/metrics.hpp"
#include "seq2label/model.hpp"
#include "seq2label/synthetic.hpp"
#include "seq2label/trainer.hpp"
#include "seq2label/vocab.hpp"

namespace seq2label {

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir);
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gencorpus

inline void cmd_gencorpus(const GenConfig& gen, std::uint64_t seed,
                          const std::string& out_dir) {
  detail::ensure_dir(out_dir);
  auto corpus = generate_synthetic(gen, seed);
  const auto n = static_cast<std::size_t>(gen.corpus_size);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  const auto& recs = corpus.records;
  const std::filesystem::path dir(out_dir);
  write_corpus((dir / "train.jsonl").string(),
               {recs.begin(), recs.begin() + static_cast<std::ptrdiff_t>(n_train)});
  write_corpus((dir / "dev.jsonl").string(),
               {recs.begin() + static_cast<std::ptrdiff_t>(n_train),
                recs.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev)});
  write_corpus((dir / "test.jsonl").string(),
               {recs.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), recs.end()});
  write_kv_file((dir / "gen_config.kv").string(), gen_config_to_kv(gen));

  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;
  manifest["topics"] = gen.topics;
  manifest["splits"] = {{"train", n_train}, {"dev", n_dev}, {"test", n - n_train - n_dev}};
  nlohmann::ordered_json phrases;
  for (std::size_t t = 0; t < corpus.topic_names.size(); ++t)
    phrases[corpus.topic_names[t]] = corpus.topic_phrases[t];
  manifest["signature_phrases"] = phrases;
  detail::write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train

struct PreparedData {
  Vocabulary vocab;
  LabelVocabulary lvocab;
  std::vector<Example> train, dev, test;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData d;
  auto train_recs = read_corpus(cfg.train_path);
  if (train_recs.empty()) throw std::runtime_error("train corpus is empty");
  d.vocab = build_vocab(all_texts(train_recs), static_cast<std::int32_t>(cfg.vocab_cap));
  d.lvocab = permute_labels(count_labels(train_recs));
  const auto max_len = static_cast<std::size_t>(cfg.max_len);
  d.train = encode_corpus(train_recs, d.vocab, d.lvocab, max_len);
  d.dev = encode_corpus(read_corpus(cfg.dev_path), d.vocab, d.lvocab, max_len);
  if (!cfg.test_path.empty())
    d.test = encode_corpus(read_corpus(cfg.test_path), d.vocab, d.lvocab, max_len);
  return d;
}

inline std::string vocab_to_text(const Vocabulary& v) {
  std::string out;
  for (const auto& tok : v.id_to_token) out += tok + "\n";
  return out;
}

inline Vocabulary vocab_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  v.id_to_token.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (v.id_to_token.size() >= Vocabulary::kReserved)
      v.token_to_id.emplace(line, v.size());
    v.id_to_token.push_back(line);
  }
  if (v.size() < Vocabulary::kReserved)
    throw std::runtime_error("vocabulary file too short: " + path);
  return v;
}

inline std::string labels_to_text(const LabelVocabulary& lv) {
  std::string out;
  for (std::size_t i = 0; i < lv.id_to_label.size(); ++i)
    out += lv.id_to_label[i] + "\t" + std::to_string(lv.counts[i]) + "\n";
  return out;
}

inline LabelVocabulary labels_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  LabelVocabulary lv;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("bad label line in " + path + ": " + line);
    lv.label_to_id.emplace(line.substr(0, tab), lv.num_labels());
    lv.id_to_label.push_back(line.substr(0, tab));
    lv.counts.push_back(std::stoll(line.substr(tab + 1)));
  }
  if (lv.id_to_label.empty()) throw std::runtime_error("empty label file: " + path);
  return lv;
}

inline std::string history_to_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const auto& rec : history) {
    nlohmann::ordered_json j;
    j["epoch"] = rec.epoch;
    j["loss"] = rec.loss;
    j["lr"] = rec.lr;
    j["dev_hl"] = rec.dev_hl;
    j["dev_p"] = rec.dev_p;
    j["dev_r"] = rec.dev_r;
    j["dev_f1"] = rec.dev_f1;
    out += j.dump() + "\n";
  }
  return out;
}

inline ModelConfig model_config_from(const RunConfig& cfg, Dim vocab_size, Dim num_labels) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.num_labels = num_labels;
  mc.embed_dim = cfg.embed_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.kernel_size = static_cast<int>(cfg.kernel_size);
  mc.dilation_rates = cfg.dilation_rates;
  mc.variant = parse_variant(cfg.attention_variant);
  mc.hier = cfg.hier;
  mc.mask_emitted = cfg.mask_emitted;
  return mc;
}

struct TrainSummary {
  int best_epoch = -1;
  double best_dev_f1 = 0;
  EvalReport test_report;  // populated when a test split is present
  bool has_test = false;
};

template <typename T>
TrainSummary run_training(const RunConfig& cfg, const PreparedData& data,
                          const std::string& out_dir,
                          const std::vector<int>& test_bands = {}) {
  detail::ensure_dir(out_dir);
  const std::filesystem::path dir(out_dir);
  write_kv_file((dir / "config.kv").string(), cfg.to_kv());

  Model<T> model(model_config_from(cfg, data.vocab.size(), data.lvocab.num_labels()),
                 cfg.seed);
  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.base_lr = cfg.base_lr;
  tc.clip = cfg.clip;
  tc.epochs = static_cast<int>(cfg.epochs);
  tc.seed = cfg.seed;
  auto result = train(model, data.train, data.dev, tc);
  restore_params(model, result.best_params);

  save_checkpoint((dir / "model.ckpt").string(), model.params());
  detail::write_text((dir / "vocab.txt").string(), vocab_to_text(data.vocab));
  detail::write_text((dir / "labels.txt").string(), labels_to_text(data.lvocab));
  detail::write_text((dir / "history.jsonl").string(), history_to_jsonl(result.history));

  TrainSummary summary;
  summary.best_epoch = result.best_epoch;
  summary.best_dev_f1 = result.best_dev_f1;
  if (!data.test.empty()) {
    summary.test_report = evaluate(model, data.test, test_bands);
    summary.has_test = true;
  }
  return summary;
}

inline TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate_for_training();
  PreparedData data = prepare_data(cfg);
  if (data.train.empty()) throw std::runtime_error("train: no usable training examples");
  if (data.dev.empty()) throw std::runtime_error("train: no usable dev examples");
  TrainSummary s = cfg.precision == "float64"
                       ? run_training<double>(cfg, data, out_dir)
                       : run_training<float>(cfg, data, out_dir);
  std::cout << "train: best dev F1 " << s.best_dev_f1 << " at epoch " << s.best_epoch
            << "; artifacts in " << out_dir << "\n";
  return s;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::vector<int> bands;
  std::string out_dir;
};

template <typename T>
EvalReport run_eval(const RunConfig& cfg, const std::filesystem::path& ckpt_dir,
                    const std::string& ckpt_file, const EvalArgs& args) {
  auto vocab = vocab_from_file((ckpt_dir / "vocab.txt").string());
  auto lvocab = labels_from_file((ckpt_dir / "labels.txt").string());

  auto records = read_corpus(args.data);
  for (const auto& rec : records)
    for (const auto& label : rec.labels)
      if (lvocab.lookup(label) < 0)
        throw std::runtime_error("label-vocabulary mismatch: corpus label '" + label +
                                 "' is unknown to the checkpoint");
  for (int k : args.bands)
    if (k < 0 || k >= lvocab.num_labels())
      throw std::runtime_error("eval: band k=" + std::to_string(k) +
                               " outside [0, " + std::to_string(lvocab.num_labels()) + ")");

  Model<T> model(model_config_from(cfg, vocab.size(), lvocab.num_labels()), cfg.seed);
  load_checkpoint(ckpt_file, model.params());
  auto examples =
      encode_corpus(records, vocab, lvocab, static_cast<std::size_t>(cfg.max_len));
  if (examples.empty()) throw std::runtime_error("eval: no usable examples in " + args.data);
  return evaluate(model, examples, args.bands);
}

inline EvalReport cmd_eval(const EvalArgs& args) {
  std::filesystem::path ckpt(args.checkpoint);
  if (std::filesystem::is_directory(ckpt)) ckpt /= "model.ckpt";
  if (!std::filesystem::exists(ckpt))
    throw std::runtime_error("eval: checkpoint not found: " + ckpt.string());
  const auto dir = ckpt.parent_path();
  const RunConfig cfg = RunConfig::from_kv(read_kv_file((dir / "config.kv").string()));

  EvalReport report = cfg.precision == "float64"
                          ? run_eval<double>(cfg, dir, ckpt.string(), args)
                          : run_eval<float>(cfg, dir, ckpt.string(), args);

  std::cout << report.to_kv();
  if (!args.out_dir.empty()) {
    detail::ensure_dir(args.out_dir);
    const std::filesystem::path out(args.out_dir);
    detail::write_text((out / "report.kv").string(), report.to_kv());
    KvMap resolved;
    resolved["checkpoint"] = ckpt.string();
    resolved["data"] = args.data;
    resolved["bands"] = detail::format_int_csv(args.bands);
    write_kv_file((out / "eval_config.kv").string(), resolved);
  }
  return report;
}

// ---------------------------------------------------------------------------
// ablate

inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v{"none", "conventional", "mdc_only",
                                          "additive", "hybrid"};
  return v;
}

struct AblationRow {
  std::string variant;
  EvalReport report;
  bool ok = false;
  std::string error;
};

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
  char buf[160];
  std::string out = "variant       HL(-)    P(+)     R(+)     F1(+)\n";
  for (const auto& row : rows) {
    if (row.ok) {
      std::snprintf(buf, sizeof buf, "%-12s  %.4f   %.4f   %.4f   %.4f\n",
                    row.variant.c_str(), row.report.hl, row.report.p, row.report.r,
                    row.report.f1);
    } else {
      std::snprintf(buf, sizeof buf, "%-12s  failed: %s\n", row.variant.c_str(),
                    row.error.c_str());
    }
    out += buf;
  }
  return out;
}

// Trains the five attention variants on identical data and seed, evaluates
// each on the test split, and emits the comparison table. Variants may train
// in parallel workers; each training is single-writer over its own model.
inline std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate_for_training();
  if (cfg.test_path.empty()) throw std::runtime_error("ablate: test_path is required");
  if (cfg.hier != 0)
    throw std::runtime_error("ablate: compares attention variants; hier must be 0");
  detail::ensure_dir(out_dir);
  const std::filesystem::path dir(out_dir);
  write_kv_file((dir / "config.kv").string(), cfg.to_kv());

  const PreparedData data = prepare_data(cfg);
  if (data.train.empty() || data.dev.empty() || data.test.empty())
    throw std::runtime_error("ablate: train/dev/test splits must all be non-empty");

  const auto& variants = ablation_variants();
  std::vector<AblationRow> rows(variants.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= variants.size()) return;
      rows[i].variant = variants[i];
      try {
        RunConfig vcfg = cfg;
        vcfg.attention_variant = variants[i];
        const auto summary =
            cfg.precision == "float64"
                ? run_training<double>(vcfg, data, (dir / variants[i]).string())
                : run_training<float>(vcfg, data, (dir / variants[i]).string());
        rows[i].report = summary.test_report;
        rows[i].ok = true;
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers = static_cast<std::size_t>(
      std::min<std::int64_t>(cfg.ablate_jobs, static_cast<std::int64_t>(variants.size())));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w + 1 < n_workers; ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  // partial results are saved even when a variant failed
  std::string jsonl;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["variant"] = row.variant;
    if (row.ok) {
      j["hl"] = row.report.hl;
      j["p"] = row.report.p;
      j["r"] = row.report.r;
      j["f1"] = row.report.f1;
    } else {
      j["error"] = row.error;
    }
    jsonl += j.dump() + "\n";
  }
  detail::write_text((dir / "ablation.jsonl").string(), jsonl);
  const std::string table = ablation_table(rows);
  detail::write_text((dir / "ablation.txt").string(), table);
  std::cout << table;

  for (const auto& row : rows)
    if (!row.ok)
      throw std::runtime_error("ablate: variant '" + row.variant +
                               "' failed (partial results saved): " + row.error);
  return rows;
}

}  // namespace seq2label
