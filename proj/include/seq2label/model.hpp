#pragma once

// The assembled classifier: embedding + BiLSTM encoder, semantic units from
// either the dilated-convolution stack or the hierarchical encoder, bridge
// from encoder final states to the decoder start state, and the attention
// decoder. Parameters live in a named registry shared with the optimizer and
// the checkpoint writer; initialization is uniform [-0.08, 0.08] seeded per
// parameter name, so models that share a parameter share its init.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seq2label/common.hpp"
#include "seq2label/corpus.hpp"
#include "seq2label/decoder.hpp"
#include "seq2label/encoder.hpp"
#include "seq2label/mdc.hpp"
#include "seq2label/tensor.hpp"

namespace seq2label {

struct ModelConfig {
  Dim vocab_size = 0;
  Dim num_labels = 0;
  Dim embed_dim = 512;
  Dim hidden_dim = 512;
  int kernel_size = 3;
  std::vector<int> dilation_rates{1, 2, 3};
  AttentionVariant variant = AttentionVariant::hybrid;
  Dim hier = 0;  // 0 = dilated-convolution units; N > 0 = hierarchical encoder
  bool mask_emitted = true;
};

template <typename T>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.vocab_size < 1 || cfg.num_labels < 1 || cfg.embed_dim < 1 || cfg.hidden_dim < 1)
      throw std::invalid_argument("model: dimensions must be positive");
    schedule_ = validate_schedule(cfg.kernel_size, cfg.dilation_rates);
    if (cfg.hier == 0 && !schedule_.accepted)
      throw std::invalid_argument("model: rejected dilation schedule " +
                                  schedule_str(schedule_));
    const Dim h = cfg.hidden_dim;

    embed_ = reg("embed", Tensor<T>(Shape{cfg.vocab_size, cfg.embed_dim}));
    enc_fwd_ = make_lstm("enc_fwd", cfg.embed_dim, h);
    enc_bwd_ = make_lstm("enc_bwd", cfg.embed_dim, h);

    if (variant_uses_units(cfg.variant)) {
      if (cfg.hier > 0) {
        hier_top_ = make_lstm("hier_top", 2 * h, h);
      } else {
        const std::size_t n_layers = cfg.dilation_rates.size();
        Dim cin = 2 * h;
        for (std::size_t l = 0; l < n_layers; ++l) {
          const std::string base = "mdc." + std::to_string(l);
          mdc_.layers.push_back(ConvLayer<T>{
              reg(base + ".kernel", Tensor<T>(Shape{cfg.kernel_size, cin, h})),
              reg(base + ".bias", Tensor<T>(Shape{h}))});
          cin = h;
        }
      }
    }

    bridge_wh_ = reg("bridge.wh", Tensor<T>(Shape{2 * h, h}));
    bridge_bh_ = reg("bridge.bh", Tensor<T>(Shape{h}));
    bridge_wc_ = reg("bridge.wc", Tensor<T>(Shape{2 * h, h}));
    bridge_bc_ = reg("bridge.bc", Tensor<T>(Shape{h}));

    dec_.label_embed =
        reg("label_embed", Tensor<T>(Shape{cfg.num_labels + 2, cfg.embed_dim}));
    dec_.lstm = make_lstm("dec", cfg.embed_dim, h);
    if (variant_uses_units(cfg.variant)) {
      dec_.att.units_wa = reg("att.units_wa", Tensor<T>(Shape{h, h}));
      dec_.att.units_wc = reg("att.units_wc", Tensor<T>(Shape{2 * h, h}));
    }
    if (variant_uses_words(cfg.variant)) {
      dec_.att.words_wa = reg("att.words_wa", Tensor<T>(Shape{h, 2 * h}));
      dec_.att.words_wc = reg("att.words_wc", Tensor<T>(Shape{3 * h, h}));
    }
    dec_.w_out = reg("w_out", Tensor<T>(Shape{h, cfg.num_labels + 1}));

    for (auto& [name, tensor] : params_) {
      Rng rng(derive_seed(seed, "init:" + name));
      for (Dim i = 0; i < tensor.numel(); ++i)
        tensor.data()[i] = static_cast<T>(rng.uniform(-0.08, 0.08));
      tensor.set_requires_grad(true);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const DilationSchedule& schedule() const { return schedule_; }
  std::vector<std::pair<std::string, Tensor<T>>>& params() { return params_; }
  const std::vector<std::pair<std::string, Tensor<T>>>& params() const { return params_; }

  Annotations<T> encode(const std::int32_t* ids, Dim n) const {
    return bilstm_encode<T>(ids, n, embed_, enc_fwd_, enc_bwd_);
  }

  // semantic-unit memory: dilated convolution stack, or the hierarchical
  // encoder when hier > 0; empty tensor for the variants that never use it
  Tensor<T> semantic_units(const Annotations<T>& ann) const {
    if (!variant_uses_units(cfg_.variant)) return Tensor<T>();
    return cfg_.hier > 0 ? hier_encode(ann.h, cfg_.hier, hier_top_)
                         : mdc_forward(ann.h, schedule_, mdc_);
  }

  // learned affine + tanh of the concatenated final states; with zero encoder
  // states this is exactly tanh(bias)
  LstmState<T> init_decoder(const Annotations<T>& ann) const {
    auto finals = concat(1, {ann.fwd_final, ann.bwd_final});  // [1, 2H]
    return LstmState<T>{tanh(add(matmul(finals, bridge_wh_), bridge_bh_)),
                        tanh(add(matmul(finals, bridge_wc_), bridge_bc_))};
  }

  DecodeOut<T> step(std::int32_t prev_label, const LstmState<T>& state,
                    const Tensor<T>& words, const Tensor<T>& units) const {
    return decode_step(prev_label, state, words, units, cfg_.variant, dec_);
  }

  // teacher forcing: feed BOS then the gold prefix; one logits row per gold
  // step (EOS included)
  std::vector<Tensor<T>> teacher_logits(const std::int32_t* ids, Dim n,
                                        const std::int32_t* gold, Dim n_gold) const {
    auto ann = encode(ids, n);
    auto units = semantic_units(ann);
    auto state = init_decoder(ann);
    std::vector<Tensor<T>> logits;
    logits.reserve(static_cast<std::size_t>(n_gold));
    std::int32_t prev = bos_id();
    for (Dim t = 0; t < n_gold; ++t) {
      auto out = step(prev, state, ann.h, units);
      logits.push_back(out.logits);
      state = out.state;
      prev = gold[t];
    }
    return logits;
  }

  std::vector<std::int32_t> predict(const std::int32_t* ids, Dim n) const {
    auto ann = encode(ids, n);
    auto units = semantic_units(ann);
    return greedy_decode(ann.h, units, cfg_.variant, dec_, init_decoder(ann),
                         cfg_.num_labels + 1, cfg_.mask_emitted);
  }

  std::int32_t eos_id() const { return static_cast<std::int32_t>(cfg_.num_labels); }
  std::int32_t bos_id() const { return static_cast<std::int32_t>(cfg_.num_labels + 1); }

 private:
  Tensor<T> reg(const std::string& name, Tensor<T> t) {
    params_.emplace_back(name, t);
    return t;
  }
  LstmParams<T> make_lstm(const std::string& base, Dim in, Dim h) {
    return LstmParams<T>{reg(base + ".wx", Tensor<T>(Shape{in, 4 * h})),
                         reg(base + ".wh", Tensor<T>(Shape{h, 4 * h})),
                         reg(base + ".b", Tensor<T>(Shape{4 * h}))};
  }

  ModelConfig cfg_;
  DilationSchedule schedule_;
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  Tensor<T> embed_;
  LstmParams<T> enc_fwd_, enc_bwd_;
  MdcParams<T> mdc_;
  LstmParams<T> hier_top_;
  Tensor<T> bridge_wh_, bridge_bh_, bridge_wc_, bridge_bc_;
  DecoderParams<T> dec_;
};

}  // namespace seq2label
