#include "seq2label/mdc.hpp"

#include <gtest/gtest.h>

#include "seq2label/common.hpp"

using namespace seq2label;

namespace {

MdcParams<double> random_mdc(int kernel, std::size_t layers, Dim in_ch, Dim hidden,
                             Rng& rng, double bias = 0.1) {
  auto p = MdcParams<double>::make(kernel, layers, in_ch, hidden);
  for (auto& layer : p.layers) {
    for (Dim i = 0; i < layer.kernel.numel(); ++i)
      layer.kernel.data()[i] = rng.uniform(-0.5, 0.5);
    for (Dim i = 0; i < layer.bias.numel(); ++i) layer.bias.data()[i] = bias;
  }
  return p;
}

}  // namespace

TEST(ValidateSchedule, PaperArithmetic) {
  auto s = validate_schedule(3, {1, 2, 3});
  EXPECT_EQ(s.m_seq, (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(s.accepted);  // M_2 = 2 <= 3

  auto r = validate_schedule(3, {2, 4, 8});
  EXPECT_EQ(r.m_seq[2], 8);
  EXPECT_EQ(r.m_seq[1], 4);  // max(0, 0, 4)
  EXPECT_FALSE(r.accepted);  // 4 > 3

  auto ones = validate_schedule(3, {1, 1, 1});
  EXPECT_EQ(ones.m_seq[1], 1);  // max(-1, 1, 1)
  EXPECT_TRUE(ones.accepted);
}

TEST(ValidateSchedule, ErrorsAndSingleLayer) {
  EXPECT_THROW(validate_schedule(3, {1, 0, 2}), std::invalid_argument);
  EXPECT_THROW(validate_schedule(3, {}), std::invalid_argument);
  EXPECT_THROW(validate_schedule(1, {1, 2}), std::invalid_argument);
  EXPECT_TRUE(validate_schedule(3, {4}).accepted);
}

TEST(ReceptiveSpan, Unrolled) {
  EXPECT_EQ(receptive_span(3, {1, 2, 3}), 13);
  EXPECT_EQ(receptive_span(2, {1}), 2);
  EXPECT_EQ(receptive_span(3, {1, 1, 1}), 7);
}

TEST(MdcForward, OutputLengths) {
  Rng rng(2);
  const Dim h = 6;
  auto schedule = validate_schedule(3, {1, 2, 3});
  auto params = random_mdc(3, 3, 2 * h, h, rng);

  Tensor<double> a20(Shape{20, 2 * h});
  for (Dim i = 0; i < a20.numel(); ++i) a20.data()[i] = rng.uniform(-1, 1);
  EXPECT_EQ(mdc_forward(a20, schedule, params).shape(), (Shape{8, h}));

  Tensor<double> a13(Shape{13, 2 * h});
  EXPECT_EQ(mdc_forward(a13, schedule, params).shape(), (Shape{1, h}));
}

TEST(MdcForward, ShortInputZeroPadEquivalence) {
  Rng rng(3);
  const Dim h = 5, n = 5;
  auto schedule = validate_schedule(3, {1, 2, 3});
  auto params = random_mdc(3, 3, 2 * h, h, rng);
  Tensor<double> ann(Shape{n, 2 * h});
  for (Dim i = 0; i < ann.numel(); ++i) ann.data()[i] = rng.uniform(-1, 1);

  auto out = mdc_forward(ann, schedule, params);
  EXPECT_EQ(out.shape(), (Shape{1, h}));

  // identical to running on a hand-padded input
  Tensor<double> padded(Shape{13, 2 * h});
  for (Dim i = 0; i < ann.numel(); ++i) padded.data()[i] = ann.data()[i];
  auto expect = mdc_forward(padded, schedule, params);
  for (Dim i = 0; i < out.numel(); ++i) EXPECT_EQ(out.data()[i], expect.data()[i]);
}

TEST(MdcForward, LocalityNoHoles) {
  // every unit depends on exactly span consecutive annotations
  Rng rng(7);
  const Dim h = 8, n = 20;
  auto schedule = validate_schedule(3, {1, 2, 3});
  const Dim span = receptive_span(3, {1, 2, 3});
  auto params = random_mdc(3, 3, 2 * h, h, rng);
  Tensor<double> ann(Shape{n, 2 * h});
  for (Dim i = 0; i < ann.numel(); ++i) ann.data()[i] = rng.uniform(-1, 1);
  auto base = mdc_forward(ann, schedule, params);
  const Dim m = base.dim(0);
  for (Dim p = 0; p < n; ++p) {
    auto mod = ann.clone();
    for (Dim c = 0; c < 2 * h; ++c) mod.data()[p * 2 * h + c] += 1.0;
    auto out = mdc_forward(mod, schedule, params);
    for (Dim j = 0; j < m; ++j) {
      bool changed = false;
      for (Dim c = 0; c < h; ++c) changed = changed || out.at(j, c) != base.at(j, c);
      const bool inside = p >= j && p <= j + span - 1;
      EXPECT_EQ(changed, inside) << "unit " << j << " position " << p;
    }
  }
}

TEST(MdcForward, ChannelContractAndGradients) {
  Rng rng(9);
  const Dim h = 4;
  auto schedule = validate_schedule(2, {1, 2});
  auto params = random_mdc(2, 2, 2 * h, h, rng);
  for (Dim n : {2, 4, 7, 9}) {
    Tensor<double> ann(Shape{n, 2 * h});
    for (Dim i = 0; i < ann.numel(); ++i) ann.data()[i] = rng.uniform(-1, 1);
    EXPECT_EQ(mdc_forward(ann, schedule, params).dim(1), h);
  }

  Tensor<double> ann(Shape{8, 2 * h});
  for (Dim i = 0; i < ann.numel(); ++i) ann.data()[i] = rng.uniform(-1, 1);
  const double err = grad_check<double>(
      [&](const Tensor<double>& k0) {
        MdcParams<double> p2 = params;
        p2.layers[0].kernel = k0;
        return sum(mdc_forward(ann, schedule, p2));
      },
      params.layers[0].kernel, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(MdcForward, RejectedScheduleRefused) {
  Rng rng(1);
  const Dim h = 4;
  auto bad = validate_schedule(3, {2, 4, 8});
  auto params = random_mdc(3, 3, 2 * h, h, rng);
  Tensor<double> ann(Shape{30, 2 * h});
  try {
    mdc_forward(ann, bad, params);
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("M=[2,4,8]"), std::string::npos);
  }
}
