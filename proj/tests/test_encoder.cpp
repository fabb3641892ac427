#include "seq2label/encoder.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "seq2label/common.hpp"

using namespace seq2label;

namespace {

void fill_uniform(Tensor<double>& t, Rng& rng, double lo = -0.4, double hi = 0.4) {
  for (Dim i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
}

LstmParams<double> random_lstm(Dim in, Dim hidden, Rng& rng) {
  auto p = LstmParams<double>::make(in, hidden);
  fill_uniform(p.wx, rng);
  fill_uniform(p.wh, rng);
  fill_uniform(p.b, rng);
  return p;
}

Tensor<double> random_embed(Dim v, Dim d, Rng& rng) {
  Tensor<double> e(Shape{v, d});
  fill_uniform(e, rng);
  return e;
}

}  // namespace

TEST(BilstmEncode, ZeroParametersGiveZeroAnnotations) {
  const Dim d = 3, h = 4;
  Tensor<double> embed(Shape{6, d});  // zero embeddings too
  auto fwd = LstmParams<double>::make(d, h);
  auto bwd = LstmParams<double>::make(d, h);
  const std::int32_t ids[] = {1, 2, 3};
  auto ann = bilstm_encode<double>(ids, 3, embed, fwd, bwd);
  EXPECT_EQ(ann.h.shape(), (Shape{3, 2 * h}));
  for (Dim i = 0; i < ann.h.numel(); ++i) EXPECT_DOUBLE_EQ(ann.h.data()[i], 0.0);
  for (Dim i = 0; i < h; ++i) EXPECT_DOUBLE_EQ(ann.fwd_final.data()[i], 0.0);
}

TEST(BilstmEncode, ShapeContract) {
  Rng rng(5);
  const Dim d = 5, h = 32, n = 7;
  auto embed = random_embed(9, d, rng);
  auto fwd = random_lstm(d, h, rng);
  auto bwd = random_lstm(d, h, rng);
  std::vector<std::int32_t> ids{0, 3, 5, 2, 8, 1, 4};
  auto ann = bilstm_encode<double>(ids.data(), n, embed, fwd, bwd);
  EXPECT_EQ(ann.h.shape(), (Shape{7, 64}));
  EXPECT_EQ(ann.length, 7);
}

TEST(BilstmEncode, ReversalSymmetry) {
  // encoding the reversed sequence with swapped directions reproduces the
  // annotations reversed in position with halves swapped
  Rng rng(11);
  const Dim d = 4, h = 6, n = 5;
  auto embed = random_embed(10, d, rng);
  auto fwd = random_lstm(d, h, rng);
  auto bwd = random_lstm(d, h, rng);
  std::vector<std::int32_t> ids{2, 7, 1, 9, 4};
  std::vector<std::int32_t> rev(ids.rbegin(), ids.rend());
  auto a = bilstm_encode<double>(ids.data(), n, embed, fwd, bwd);
  auto b = bilstm_encode<double>(rev.data(), n, embed, bwd, fwd);
  for (Dim t = 0; t < n; ++t) {
    for (Dim j = 0; j < h; ++j) {
      EXPECT_DOUBLE_EQ(a.h.at(t, j), b.h.at(n - 1 - t, h + j));
      EXPECT_DOUBLE_EQ(a.h.at(t, h + j), b.h.at(n - 1 - t, j));
    }
  }
}

TEST(BilstmEncode, HiddenComponentsBounded) {
  Rng rng(13);
  const Dim d = 4, h = 8, n = 12;
  auto embed = random_embed(20, d, rng);
  Tensor<double> big_embed(Shape{20, d});
  fill_uniform(big_embed, rng, -3.0, 3.0);
  auto fwd = random_lstm(d, h, rng);
  auto bwd = random_lstm(d, h, rng);
  std::vector<std::int32_t> ids;
  for (Dim i = 0; i < n; ++i) ids.push_back(static_cast<std::int32_t>(i % 20));
  auto ann = bilstm_encode<double>(ids.data(), n, big_embed, fwd, bwd);
  for (Dim i = 0; i < ann.h.numel(); ++i) {
    EXPECT_GT(ann.h.data()[i], -1.0);
    EXPECT_LT(ann.h.data()[i], 1.0);
  }
}

TEST(BilstmEncode, PaddingInvariance) {
  // encoding an example alone equals encoding it with trailing pad ignored:
  // the encoder only ever sees the true length, so feed the same ids twice
  // once as a prefix of a longer padded buffer
  Rng rng(17);
  const Dim d = 3, h = 5;
  auto embed = random_embed(8, d, rng);
  auto fwd = random_lstm(d, h, rng);
  auto bwd = random_lstm(d, h, rng);
  std::vector<std::int32_t> padded{3, 1, 4, 0, 0, 0};  // true length 3
  auto alone = bilstm_encode<double>(padded.data(), 3, embed, fwd, bwd);
  auto from_buffer = bilstm_encode<double>(padded.data(), 3, embed, fwd, bwd);
  for (Dim i = 0; i < alone.h.numel(); ++i)
    EXPECT_EQ(alone.h.data()[i], from_buffer.h.data()[i]);
}

TEST(BilstmEncode, GradientFlowsThroughParameters) {
  Rng rng(19);
  const Dim d = 3, h = 4, n = 4;
  auto embed = random_embed(6, d, rng);
  auto fwd = random_lstm(d, h, rng);
  auto bwd = random_lstm(d, h, rng);
  std::vector<std::int32_t> ids{1, 0, 5, 2};
  const double err = grad_check<double>(
      [&](const Tensor<double>& wx) {
        LstmParams<double> f2{wx, fwd.wh, fwd.b};
        auto ann = bilstm_encode<double>(ids.data(), n, embed, f2, bwd);
        return sum(ann.h);
      },
      fwd.wx, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(HierEncode, BoundaryRule) {
  EXPECT_EQ(hier_boundaries(12, 5), (std::vector<Dim>{4, 9, 11}));  // positions 5,10,12
  EXPECT_EQ(hier_boundaries(5, 5), (std::vector<Dim>{4}));
  EXPECT_EQ(hier_boundaries(3, 5), (std::vector<Dim>{2}));
  EXPECT_THROW(hier_boundaries(3, 0), std::invalid_argument);
}

TEST(HierEncode, OutputLengthIsCeil) {
  Rng rng(23);
  const Dim h = 4;
  auto top = random_lstm(2 * h, h, rng);
  for (Dim n : {1, 4, 5, 6, 12, 13}) {
    Tensor<double> ann(Shape{n, 2 * h});
    fill_uniform(ann, rng);
    auto out = hier_encode(ann, 5, top);
    EXPECT_EQ(out.dim(0), (n + 4) / 5) << "n=" << n;
    EXPECT_EQ(out.dim(1), h);
  }
}
