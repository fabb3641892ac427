#pragma once

// Bidirectional LSTM encoder producing per-token annotations h_i = [fwd; bwd],
// plus the hierarchical baseline encoder that replaces the convolutional
// semantic units: annotations at fixed sentence boundaries feed a second,
// unidirectional LSTM.
//
// Standard LSTM cell, no peepholes; gate order i|f|o|u in the fused weights.
// Both directions start from zero states.

#include <stdexcept>
#include <vector>

#include "seq2label/tensor.hpp"

namespace seq2label {

template <typename T>
struct LstmParams {
  Tensor<T> wx;  // [input_dim, 4H]
  Tensor<T> wh;  // [H, 4H]
  Tensor<T> b;   // [4H]

  Dim input_dim() const { return wx.dim(0); }
  Dim hidden() const { return wh.dim(0); }

  static LstmParams make(Dim input_dim, Dim hidden) {
    return LstmParams{Tensor<T>(Shape{input_dim, 4 * hidden}),
                      Tensor<T>(Shape{hidden, 4 * hidden}),
                      Tensor<T>(Shape{4 * hidden})};
  }
};

template <typename T>
struct LstmState {
  Tensor<T> h;  // [1,H]
  Tensor<T> c;  // [1,H]

  static LstmState zero(Dim hidden) {
    return LstmState{Tensor<T>(Shape{1, hidden}), Tensor<T>(Shape{1, hidden})};
  }
};

template <typename T>
LstmState<T> lstm_step(const LstmParams<T>& p, const Tensor<T>& x,
                       const LstmState<T>& prev) {
  if (x.rank() != 2 || x.dim(1) != p.input_dim())
    shape_error("lstm_step", x.shape(), p.wx.shape());
  const Dim h = p.hidden();
  auto gates = add(add(matmul(x, p.wx), matmul(prev.h, p.wh)), p.b);  // [1,4H]
  auto in_gate = sigmoid(slice(gates, 1, 0, h));
  auto forget_gate = sigmoid(slice(gates, 1, h, h));
  auto out_gate = sigmoid(slice(gates, 1, 2 * h, h));
  auto candidate = tanh(slice(gates, 1, 3 * h, h));
  auto cell = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  auto hidden = mul(out_gate, tanh(cell));
  return LstmState<T>{hidden, cell};
}

// Per-position annotations [n, 2H] plus the final hidden state of each
// direction (used to initialize the decoder).
template <typename T>
struct Annotations {
  Tensor<T> h;          // [n, 2H]
  Tensor<T> fwd_final;  // [1, H]
  Tensor<T> bwd_final;  // [1, H]
  Dim length = 0;
};

template <typename T>
Annotations<T> bilstm_encode(const std::int32_t* ids, Dim n, const Tensor<T>& embed,
                             const LstmParams<T>& fwd, const LstmParams<T>& bwd) {
  if (n < 1) throw std::invalid_argument("bilstm_encode: empty token sequence");
  if (embed.dim(1) != fwd.input_dim() || embed.dim(1) != bwd.input_dim())
    shape_error("bilstm_encode", embed.shape(), fwd.wx.shape());
  if (fwd.hidden() != bwd.hidden())
    shape_error("bilstm_encode", fwd.wh.shape(), bwd.wh.shape());
  const Dim hdim = fwd.hidden();

  auto x = embedding_lookup(embed, std::vector<std::int32_t>(ids, ids + n));  // [n,D]
  std::vector<Tensor<T>> fwd_h(static_cast<std::size_t>(n));
  std::vector<Tensor<T>> bwd_h(static_cast<std::size_t>(n));

  auto state = LstmState<T>::zero(hdim);
  for (Dim t = 0; t < n; ++t) {
    state = lstm_step(fwd, slice(x, 0, t, 1), state);
    fwd_h[static_cast<std::size_t>(t)] = state.h;
  }
  auto fwd_final = state.h;

  state = LstmState<T>::zero(hdim);
  for (Dim t = n - 1; t >= 0; --t) {
    state = lstm_step(bwd, slice(x, 0, t, 1), state);
    bwd_h[static_cast<std::size_t>(t)] = state.h;
  }
  auto bwd_final = state.h;

  std::vector<Tensor<T>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Dim t = 0; t < n; ++t)
    rows.push_back(concat(1, {fwd_h[static_cast<std::size_t>(t)],
                              bwd_h[static_cast<std::size_t>(t)]}));
  Annotations<T> out;
  out.h = n == 1 ? rows[0] : concat(0, rows);
  out.fwd_final = fwd_final;
  out.bwd_final = bwd_final;
  out.length = n;
  return out;
}

// 1-based boundary positions N, 2N, ... plus n itself when it is not a
// multiple of N; output length is ceil(n / N).
inline std::vector<Dim> hier_boundaries(Dim n, Dim boundary) {
  if (boundary < 1) throw std::invalid_argument("hier_encode: boundary must be >= 1");
  std::vector<Dim> picks;
  for (Dim p = boundary; p <= n; p += boundary) picks.push_back(p - 1);
  if (n % boundary != 0) picks.push_back(n - 1);
  return picks;
}

// Sentence-level representations: selected annotations fed through a
// unidirectional LSTM; its outputs stand in for the semantic units.
template <typename T>
Tensor<T> hier_encode(const Tensor<T>& annotations, Dim boundary,
                      const LstmParams<T>& top) {
  const Dim n = annotations.dim(0);
  auto picks = hier_boundaries(n, boundary);
  auto state = LstmState<T>::zero(top.hidden());
  std::vector<Tensor<T>> outs;
  outs.reserve(picks.size());
  for (Dim p : picks) {
    state = lstm_step(top, slice(annotations, 0, p, 1), state);
    outs.push_back(state.h);
  }
  return outs.size() == 1 ? outs[0] : concat(0, outs);
}

}  // namespace seq2label
