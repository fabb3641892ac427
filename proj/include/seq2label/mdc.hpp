#pragma once

// Multi-level dilated convolution over encoder annotations. A stack of 1-d
// convolutions, no padding, relu between layers; the first layer maps the
// 2H-dimensional annotations down to H channels. The schedule validator
// computes the maximum distance between nonzero kernel taps per layer
// (M-sequence) and accepts iff M_2 <= K, which rules out gridding holes.

#include <stdexcept>
#include <string>
#include <vector>

#include "seq2label/common.hpp"
#include "seq2label/tensor.hpp"

namespace seq2label {

struct DilationSchedule {
  int kernel = 3;
  std::vector<int> rates;
  std::vector<int> m_seq;  // [M_1 ... M_N]
  bool accepted = false;
};

inline std::string schedule_str(const DilationSchedule& s) {
  auto ints = [](const std::vector<int>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(v[i]);
    }
    return out + "]";
  };
  return "K=" + std::to_string(s.kernel) + " rates=" + ints(s.rates) +
         " M=" + ints(s.m_seq);
}

// M_N = r_N, then M_i = max(M_{i+1} - 2 r_i, 2 r_i - M_{i+1}, r_i) downward.
inline DilationSchedule validate_schedule(int kernel, const std::vector<int>& rates) {
  if (kernel < 2)
    throw std::invalid_argument("validate_schedule: kernel size must be >= 2, got " +
                                std::to_string(kernel));
  if (rates.empty()) throw std::invalid_argument("validate_schedule: no dilation rates");
  for (int r : rates)
    if (r < 1)
      throw std::invalid_argument("validate_schedule: nonpositive dilation rate " +
                                  std::to_string(r));
  DilationSchedule s;
  s.kernel = kernel;
  s.rates = rates;
  const std::size_t n = rates.size();
  s.m_seq.assign(n, 0);
  s.m_seq[n - 1] = rates[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    const int m_next = s.m_seq[i + 1];
    const int r = rates[i];
    s.m_seq[i] = std::max({m_next - 2 * r, 2 * r - m_next, r});
  }
  // a single layer cannot grid against itself
  s.accepted = n < 2 || s.m_seq[1] <= kernel;
  return s;
}

// number of consecutive input positions feeding one output of the stack
inline Dim receptive_span(int kernel, const std::vector<int>& rates) {
  Dim total = 0;
  for (int r : rates) total += r;
  return 1 + static_cast<Dim>(kernel - 1) * total;
}

template <typename T>
struct ConvLayer {
  Tensor<T> kernel;  // [K, Cin, Cout]
  Tensor<T> bias;    // [Cout]
};

template <typename T>
struct MdcParams {
  std::vector<ConvLayer<T>> layers;

  static MdcParams make(int kernel, std::size_t n_layers, Dim in_channels, Dim hidden) {
    MdcParams p;
    Dim cin = in_channels;
    for (std::size_t i = 0; i < n_layers; ++i) {
      p.layers.push_back(ConvLayer<T>{Tensor<T>(Shape{kernel, cin, hidden}),
                                      Tensor<T>(Shape{hidden})});
      cin = hidden;
    }
    return p;
  }
};

// Semantic unit representations [m, H] with m = max(n, span) - (K-1) * sum(r).
// Inputs shorter than the receptive span are right-padded with zero vectors,
// so m >= 1 always holds and the unit-level attention memory is never empty.
template <typename T>
Tensor<T> mdc_forward(const Tensor<T>& annotations, const DilationSchedule& schedule,
                      const MdcParams<T>& params) {
  if (!schedule.accepted)
    throw std::invalid_argument("mdc_forward: rejected dilation schedule " +
                                schedule_str(schedule));
  if (schedule.rates.size() != params.layers.size())
    throw std::invalid_argument("mdc_forward: schedule has " +
                                std::to_string(schedule.rates.size()) + " rates but " +
                                std::to_string(params.layers.size()) + " layers");
  const Dim span = receptive_span(schedule.kernel, schedule.rates);
  Tensor<T> x = annotations;
  if (annotations.dim(0) < span) {
    Tensor<T> pad(Shape{span - annotations.dim(0), annotations.dim(1)});
    x = concat(0, {x, pad});
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    x = relu(add(dilated_conv1d(x, params.layers[l].kernel,
                                static_cast<Dim>(schedule.rates[l])),
                 params.layers[l].bias));
  }
  return x;
}

}  // namespace seq2label
