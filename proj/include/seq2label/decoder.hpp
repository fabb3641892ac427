#pragma once

// Unidirectional LSTM label decoder with pluggable attention.
//
// Per step the LSTM consumes the previous label's embedding, then the variant
// builds the output o_t:
//   none          o_t = s_t
//   conventional  o_t = tanh(W_c [s_t ; attend(s_t, h)])
//   mdc_only      o_t = tanh(W_c [s_t ; attend(s_t, g)])
//   additive      s'_t and s~_t from independent hops off s_t, o_t = s'_t + s~_t
//   hybrid        s'_t from the unit hop off s_t, then s~_t from the word hop
//                 off s'_t; o_t = s'_t + s~_t
// The label distribution is softmax(W_o o_t) over real labels plus EOS.
// Attention scores are bilinear: e_i = query^T W_a m_i.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "seq2label/encoder.hpp"
#include "seq2label/tensor.hpp"

namespace seq2label {

enum class AttentionVariant { none, conventional, mdc_only, additive, hybrid };

inline const char* variant_name(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::none: return "none";
    case AttentionVariant::conventional: return "conventional";
    case AttentionVariant::mdc_only: return "mdc_only";
    case AttentionVariant::additive: return "additive";
    case AttentionVariant::hybrid: return "hybrid";
  }
  return "?";
}

inline AttentionVariant parse_variant(const std::string& s) {
  if (s == "none") return AttentionVariant::none;
  if (s == "conventional") return AttentionVariant::conventional;
  if (s == "mdc_only") return AttentionVariant::mdc_only;
  if (s == "additive") return AttentionVariant::additive;
  if (s == "hybrid") return AttentionVariant::hybrid;
  throw std::invalid_argument(
      "attention_variant must be one of none|conventional|mdc_only|additive|hybrid, got '" +
      s + "'");
}

inline bool variant_uses_units(AttentionVariant v) {
  return v == AttentionVariant::mdc_only || v == AttentionVariant::additive ||
         v == AttentionVariant::hybrid;
}

inline bool variant_uses_words(AttentionVariant v) {
  return v == AttentionVariant::conventional || v == AttentionVariant::additive ||
         v == AttentionVariant::hybrid;
}

template <typename T>
struct Attended {
  Tensor<T> weights;  // [1, n]
  Tensor<T> context;  // [1, M]
};

template <typename T>
Attended<T> attend(const Tensor<T>& query, const Tensor<T>& memory, const Tensor<T>& wa) {
  if (!memory.valid() || memory.dim(0) < 1)
    throw std::invalid_argument("attend: empty memory");
  auto scores = matmul(matmul(query, wa), transpose(memory));  // [1, n]
  auto weights = softmax(scores, 1);
  auto context = matmul(weights, memory);
  return Attended<T>{weights, context};
}

// one attention hop per memory; variants wire a subset
template <typename T>
struct AttentionParams {
  Tensor<T> units_wa;  // [H, H]
  Tensor<T> units_wc;  // [2H, H]
  Tensor<T> words_wa;  // [H, 2H]
  Tensor<T> words_wc;  // [3H, H]
};

template <typename T>
struct DecoderParams {
  Tensor<T> label_embed;  // [L+2, E]; rows are labels, EOS, BOS
  LstmParams<T> lstm;     // input E, hidden H
  AttentionParams<T> att;
  Tensor<T> w_out;        // [H, L+1]
};

template <typename T>
struct DecodeOut {
  Tensor<T> logits;  // [1, L+1]
  Tensor<T> probs;   // [1, L+1]
  LstmState<T> state;
};

template <typename T>
Tensor<T> combine(const Tensor<T>& query, const Tensor<T>& context, const Tensor<T>& wc) {
  return tanh(matmul(concat(1, {query, context}), wc));
}

template <typename T>
DecodeOut<T> decode_step(std::int32_t prev_label, const LstmState<T>& state,
                         const Tensor<T>& words, const Tensor<T>& units,
                         AttentionVariant variant, const DecoderParams<T>& p) {
  if (variant_uses_units(variant) && (!units.valid() || units.dim(0) < 1))
    throw std::invalid_argument(std::string("decode_step: variant ") +
                                variant_name(variant) +
                                " needs semantic units but none were given");
  auto x = embedding_lookup(p.label_embed, {prev_label});
  auto st = lstm_step(p.lstm, x, state);
  const Tensor<T>& s = st.h;

  Tensor<T> o;
  switch (variant) {
    case AttentionVariant::none:
      o = s;
      break;
    case AttentionVariant::conventional:
      o = combine(s, attend(s, words, p.att.words_wa).context, p.att.words_wc);
      break;
    case AttentionVariant::mdc_only:
      o = combine(s, attend(s, units, p.att.units_wa).context, p.att.units_wc);
      break;
    case AttentionVariant::additive: {
      auto su = combine(s, attend(s, units, p.att.units_wa).context, p.att.units_wc);
      auto sw = combine(s, attend(s, words, p.att.words_wa).context, p.att.words_wc);
      o = add(su, sw);
      break;
    }
    case AttentionVariant::hybrid: {
      auto su = combine(s, attend(s, units, p.att.units_wa).context, p.att.units_wc);
      auto sw = combine(su, attend(su, words, p.att.words_wa).context, p.att.words_wc);
      o = add(su, sw);
      break;
    }
  }
  auto logits = matmul(o, p.w_out);
  return DecodeOut<T>{logits, softmax(logits, 1), st};
}

// Greedy argmax decoding. Already-emitted labels are masked to probability
// zero when mask_emitted is set (EOS never masked); ties break to the lowest
// id. Stops on EOS or after max_steps; the returned sequence excludes EOS.
template <typename T>
std::vector<std::int32_t> greedy_decode(const Tensor<T>& words, const Tensor<T>& units,
                                        AttentionVariant variant,
                                        const DecoderParams<T>& p,
                                        LstmState<T> state, Dim max_steps,
                                        bool mask_emitted = true) {
  const Dim n_out = p.w_out.dim(1);   // labels + EOS
  const std::int32_t eos = static_cast<std::int32_t>(n_out - 1);
  const std::int32_t bos = eos + 1;
  std::vector<std::int32_t> emitted;
  std::int32_t prev = bos;
  for (Dim t = 0; t < max_steps; ++t) {
    auto out = decode_step(prev, state, words, units, variant, p);
    state = out.state;
    std::vector<T> probs(out.probs.data(), out.probs.data() + n_out);
    if (mask_emitted)
      for (std::int32_t id : emitted) probs[static_cast<std::size_t>(id)] = T(0);
    std::int32_t best = 0;
    for (std::int32_t i = 1; i < static_cast<std::int32_t>(n_out); ++i)
      if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)])
        best = i;
    if (best == eos) break;
    emitted.push_back(best);
    prev = best;
  }
  return emitted;
}

}  // namespace seq2label
