#pragma once

// Training: teacher-forced sequence loss, elementwise gradient clipping,
// bias-corrected Adam, the halving learning-rate schedule, and the epoch
// loop with best-dev-checkpoint retention.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seq2label/corpus.hpp"
#include "seq2label/metrics.hpp"
#include "seq2label/model.hpp"
#include "seq2label/tensor.hpp"

namespace seq2label {

inline thread_local std::uint64_t g_clamped_loss_steps = 0;

namespace detail {
// -log(1e-12): a gold probability below 1e-12 is clamped and counted
inline constexpr double kMaxStepLoss = 27.631021115928547;
}  // namespace detail

// Sum of per-step cross entropies for one gold sequence plus the step count.
// Steps whose gold probability underflows 1e-12 contribute the clamped
// constant (no gradient) and bump the warning counter.
template <typename T>
std::pair<Tensor<T>, Dim> sequence_loss_sum(const std::vector<Tensor<T>>& step_logits,
                                            const std::int32_t* gold, Dim n_gold) {
  if (static_cast<Dim>(step_logits.size()) != n_gold || n_gold < 1)
    throw std::invalid_argument("sequence_loss: need one distribution per gold step");
  Tensor<T> total;
  for (Dim t = 0; t < n_gold; ++t) {
    Tensor<T> ce = cross_entropy(step_logits[static_cast<std::size_t>(t)],
                                 static_cast<Dim>(gold[t]));
    if (static_cast<double>(ce.value()) > detail::kMaxStepLoss) {
      ++g_clamped_loss_steps;
      ce = Tensor<T>(Shape{1}, static_cast<T>(detail::kMaxStepLoss));
    }
    total = total.valid() ? add(total, ce) : ce;
  }
  return {total, n_gold};
}

// mean over steps of -log P(gold_t)
template <typename T>
Tensor<T> sequence_loss(const std::vector<Tensor<T>>& step_logits,
                        const std::int32_t* gold, Dim n_gold) {
  auto [total, steps] = sequence_loss_sum(step_logits, gold, n_gold);
  return scale(total, T(1) / static_cast<T>(steps));
}

// Teacher-forced batch loss: the per-step mean over every step of every
// example, so steps, not examples, weigh equally.
template <typename T>
Tensor<T> batch_loss(const Model<T>& model, const Batch& batch) {
  Tensor<T> total;
  Dim steps = 0;
  for (Dim i = 0; i < batch.size; ++i) {
    const Dim n = batch.token_len[static_cast<std::size_t>(i)];
    const Dim m = batch.label_len[static_cast<std::size_t>(i)];
    auto logits = model.teacher_logits(batch.token_row(i), n, batch.label_row(i), m);
    auto [ex_sum, ex_steps] = sequence_loss_sum(logits, batch.label_row(i), m);
    total = total.valid() ? add(total, ex_sum) : ex_sum;
    steps += ex_steps;
  }
  return scale(total, T(1) / static_cast<T>(steps));
}

// elementwise clamp into [-range, range]; never changes a component's sign
template <typename T>
void clip_gradients(std::vector<std::pair<std::string, Tensor<T>>>& params, T range) {
  if (range <= 0) throw std::invalid_argument("clip_gradients: range must be positive");
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (T& x : p.mutable_grad()) x = std::min(range, std::max(-range, x));
  }
}

// lr = base * 2^-epoch
inline double lr_schedule(int epoch, double base_lr = 3e-4) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: negative epoch");
  return std::ldexp(base_lr, -epoch);
}

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<std::pair<std::string, Tensor<T>>>& params,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& [name, p] : params_) {
      m_.emplace_back(p.numel(), T(0));
      v_.emplace_back(p.numel(), T(0));
    }
  }

  std::int64_t step_count() const { return step_; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  void step(double lr) {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& [name, p] = params_[pi];
      if (!p.has_grad()) continue;
      const auto& g = p.grad();
      for (const T x : g)
        if (!std::isfinite(static_cast<double>(x)))
          throw std::runtime_error("adam: non-finite gradient in parameter '" + name + "'");
      auto& m = m_[pi];
      auto& v = v_[pi];
      T* w = p.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = static_cast<T>(beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * gi);
        v[i] = static_cast<T>(beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * gi * gi);
        const double mhat = static_cast<double>(m[i]) / bc1;
        const double vhat = static_cast<double>(v[i]) / bc2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) -
                              lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>>& params_;
  std::vector<std::vector<T>> m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
};

struct TrainConfig {
  Dim batch_size = 64;
  double base_lr = 3e-4;
  double clip = 10.0;
  int epochs = 10;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0;
  double lr = 0;
  double dev_hl = 0, dev_p = 0, dev_r = 0, dev_f1 = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_dev_f1 = 0;
  // parameter values of the best-dev epoch, aligned with model.params()
  std::vector<std::vector<double>> best_params;
};

template <typename T>
EvalReport evaluate(const Model<T>& model, const std::vector<Example>& examples,
                    const std::vector<int>& bands = {}) {
  const Dim L = model.config().num_labels;
  BinaryLabelMatrix pred(static_cast<Dim>(examples.size()), L);
  BinaryLabelMatrix gold(static_cast<Dim>(examples.size()), L);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    auto ids = model.predict(ex.tokens.data(), static_cast<Dim>(ex.tokens.size()));
    for (std::int32_t id : ids) pred.set(static_cast<Dim>(i), id, true);
    for (std::int32_t id : ex.labels)
      if (id < L) gold.set(static_cast<Dim>(i), id, true);  // skip the EOS terminator
  }
  return evaluate_matrices(pred, gold, bands);
}

template <typename T>
TrainResult train(Model<T>& model, const std::vector<Example>& train_examples,
                  const std::vector<Example>& dev_examples, const TrainConfig& cfg) {
  if (train_examples.empty()) throw std::invalid_argument("train: empty training set");
  if (dev_examples.empty()) throw std::invalid_argument("train: empty dev set");
  Adam<T> opt(model.params());
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.base_lr);
    auto batches = make_batches(train_examples, cfg.batch_size,
                                derive_seed(cfg.seed, "batching", static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0;
    Dim step_total = 0;
    for (const auto& batch : batches) {
      opt.zero_grad();
      Graph<T> graph;
      auto loss = batch_loss(model, batch);
      const double loss_value = static_cast<double>(loss.value());
      graph.backward(loss);
      clip_gradients(model.params(), static_cast<T>(cfg.clip));
      opt.step(lr);
      Dim batch_steps = 0;
      for (auto len : batch.label_len) batch_steps += len;
      loss_sum += loss_value * static_cast<double>(batch_steps);
      step_total += batch_steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(step_total);
    rec.lr = lr;
    const EvalReport dev = evaluate(model, dev_examples);
    rec.dev_hl = dev.hl;
    rec.dev_p = dev.p;
    rec.dev_r = dev.r;
    rec.dev_f1 = dev.f1;
    result.history.push_back(rec);
    if (result.best_epoch < 0 || dev.f1 > result.best_dev_f1) {
      result.best_epoch = epoch;
      result.best_dev_f1 = dev.f1;
      result.best_params.clear();
      for (auto& [name, p] : model.params())
        result.best_params.emplace_back(p.data(), p.data() + p.numel());
    }
  }
  return result;
}

// writes the retained best-dev parameter values back into the model
template <typename T>
void restore_params(Model<T>& model, const std::vector<std::vector<double>>& values) {
  auto& params = model.params();
  if (values.size() != params.size())
    throw std::invalid_argument("restore_params: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    if (static_cast<Dim>(values[i].size()) != p.numel())
      throw std::invalid_argument("restore_params: size mismatch for '" + name + "'");
    for (Dim j = 0; j < p.numel(); ++j)
      p.data()[j] = static_cast<T>(values[i][static_cast<std::size_t>(j)]);
  }
}

}  // namespace seq2label
