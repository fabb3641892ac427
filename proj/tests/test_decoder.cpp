#include "seq2label/decoder.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "seq2label/common.hpp"
#include "seq2label/model.hpp"

using namespace seq2label;

namespace {

void fill_uniform(Tensor<double>& t, Rng& rng, double lo = -0.3, double hi = 0.3) {
  for (Dim i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
}

Tensor<double> random_t(Shape s, Rng& rng, double lo = -0.3, double hi = 0.3) {
  Tensor<double> t(std::move(s));
  fill_uniform(t, rng, lo, hi);
  return t;
}

ModelConfig tiny_config(AttentionVariant v, Dim hier = 0) {
  ModelConfig cfg;
  cfg.vocab_size = 12;
  cfg.num_labels = 4;
  cfg.embed_dim = 5;
  cfg.hidden_dim = 6;
  cfg.kernel_size = 2;
  cfg.dilation_rates = {1, 2};
  cfg.variant = v;
  cfg.hier = hier;
  return cfg;
}

}  // namespace

TEST(Attend, UniformSingletonAndClosedForm) {
  Rng rng(1);
  const Dim q = 3, m = 3;
  auto query = random_t(Shape{1, q}, rng);
  Tensor<double> wa(Shape{q, m});  // zero -> all scores equal
  auto memory = random_t(Shape{4, m}, rng);
  auto att = attend(query, memory, wa);
  for (Dim i = 0; i < 4; ++i) EXPECT_NEAR(att.weights.at(0, i), 0.25, 1e-15);
  for (Dim j = 0; j < m; ++j) {
    double mean = 0;
    for (Dim i = 0; i < 4; ++i) mean += memory.at(i, j) / 4.0;
    EXPECT_NEAR(att.context.at(0, j), mean, 1e-12);
  }

  auto one = random_t(Shape{1, m}, rng);
  auto satt = attend(query, one, random_t(Shape{q, m}, rng));
  EXPECT_NEAR(satt.weights.at(0, 0), 1.0, 1e-15);
  for (Dim j = 0; j < m; ++j) EXPECT_NEAR(satt.context.at(0, j), one.at(0, j), 1e-12);

  EXPECT_THROW(attend(query, Tensor<double>(), wa), std::invalid_argument);
}

TEST(Attend, SoftmaxScoresClosedForm) {
  // scores [ln 2, 0, 0] -> weights [0.5, 0.25, 0.25]; build via a 1-d
  // identity-like W_a and crafted memory
  auto query = Tensor<double>::from_data(Shape{1, 1}, {1.0});
  auto wa = Tensor<double>::from_data(Shape{1, 1}, {1.0});
  auto memory = Tensor<double>::from_data(Shape{3, 1}, {std::log(2.0), 0.0, 0.0});
  auto att = attend(query, memory, wa);
  EXPECT_NEAR(att.weights.at(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(att.weights.at(0, 1), 0.25, 1e-12);
  EXPECT_NEAR(att.weights.at(0, 2), 0.25, 1e-12);
}

TEST(Attend, ShiftInvarianceAndNormalization) {
  Rng rng(5);
  auto query = random_t(Shape{1, 4}, rng, -2, 2);
  auto wa = random_t(Shape{4, 6}, rng, -1, 1);
  auto memory = random_t(Shape{7, 6}, rng, -2, 2);
  auto att = attend(query, memory, wa);
  double sum = 0;
  for (Dim i = 0; i < 7; ++i) {
    EXPECT_GE(att.weights.at(0, i), 0.0);
    sum += att.weights.at(0, i);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);

  // adding a constant to every score leaves the weights unchanged: shift the
  // memory along a direction orthogonal to nothing — instead check softmax
  // directly through attend by augmenting the query path with a constant
  auto scores = matmul(matmul(query, wa), transpose(memory));
  auto shifted = scale(softmax(add(scores, Tensor<double>(Shape{1, 7}, 3.7)), 1), 1.0);
  auto plain = softmax(scores, 1);
  for (Dim i = 0; i < 7; ++i) EXPECT_EQ(shifted.at(0, i), plain.at(0, i));
}

TEST(DecodeStep, DistributionNormalizedAllVariants) {
  for (auto v : {AttentionVariant::none, AttentionVariant::conventional,
                 AttentionVariant::mdc_only, AttentionVariant::additive,
                 AttentionVariant::hybrid}) {
    Model<double> model(tiny_config(v), 7);
    const std::int32_t ids[] = {1, 5, 3, 8, 2, 9, 4};
    auto ann = model.encode(ids, 7);
    auto units = model.semantic_units(ann);
    auto state = model.init_decoder(ann);
    auto out = model.step(model.bos_id(), state, ann.h, units);
    EXPECT_EQ(out.probs.shape(), (Shape{1, 5}));  // |labels| + 1
    double sum = 0;
    for (Dim i = 0; i < 5; ++i) sum += out.probs.at(0, i);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(DecodeStep, DegenerateCombinationIgnoresContext) {
  // with the context block of W_c zeroed, the conventional distribution is
  // independent of the attended memory and equals softmax(W_o tanh(A s_t))
  Rng rng(11);
  const Dim h = 4, e = 3, L = 3;
  DecoderParams<double> p;
  p.label_embed = random_t(Shape{L + 2, e}, rng);
  p.lstm = LstmParams<double>{random_t(Shape{e, 4 * h}, rng),
                              random_t(Shape{h, 4 * h}, rng),
                              random_t(Shape{4 * h}, rng)};
  p.att.words_wa = random_t(Shape{h, 2 * h}, rng);
  p.att.words_wc = Tensor<double>(Shape{3 * h, h});
  for (Dim i = 0; i < h; ++i)
    for (Dim j = 0; j < h; ++j)
      p.att.words_wc.data()[i * h + j] = rng.uniform(-0.5, 0.5);  // context rows stay zero
  p.w_out = random_t(Shape{h, L + 1}, rng);

  auto state = LstmState<double>::zero(h);
  auto mem1 = random_t(Shape{5, 2 * h}, rng);
  auto mem2 = random_t(Shape{5, 2 * h}, rng);
  auto out1 = decode_step<double>(0, state, mem1, Tensor<double>(),
                                  AttentionVariant::conventional, p);
  auto out2 = decode_step<double>(0, state, mem2, Tensor<double>(),
                                  AttentionVariant::conventional, p);
  for (Dim i = 0; i <= L; ++i) EXPECT_EQ(out1.probs.at(0, i), out2.probs.at(0, i));

  // closed form: o = tanh(A s_t) where A is the s-block of W_c
  auto st = lstm_step(p.lstm, embedding_lookup(p.label_embed, {0}), state);
  auto a_block = slice(p.att.words_wc, 0, 0, h);
  auto expect = softmax(matmul(tanh(matmul(st.h, a_block)), p.w_out), 1);
  for (Dim i = 0; i <= L; ++i) EXPECT_NEAR(out1.probs.at(0, i), expect.at(0, i), 1e-12);
}

TEST(DecodeStep, HybridDiffersFromAdditiveOnSharedMemory) {
  // same memory and tied hop parameters: additive collapses to 2 s'_t while
  // hybrid re-queries with s'_t, so the distributions differ in general
  Rng rng(13);
  const Dim h = 4;
  auto s = random_t(Shape{1, h}, rng);
  auto memory = random_t(Shape{6, h}, rng);
  auto wa = random_t(Shape{h, h}, rng);
  auto wc = random_t(Shape{2 * h, h}, rng);
  auto w_out = random_t(Shape{h, 5}, rng);

  auto su = combine(s, attend(s, memory, wa).context, wc);
  auto additive = add(su, combine(s, attend(s, memory, wa).context, wc));
  auto hybrid = add(su, combine(su, attend(su, memory, wa).context, wc));
  auto pa = softmax(matmul(additive, w_out), 1);
  auto ph = softmax(matmul(hybrid, w_out), 1);
  bool differs = false;
  for (Dim i = 0; i < 5; ++i)
    differs = differs || std::fabs(pa.at(0, i) - ph.at(0, i)) > 1e-9;
  EXPECT_TRUE(differs);
}

TEST(DecodeStep, MissingUnitsRejected) {
  Model<double> model(tiny_config(AttentionVariant::hybrid), 3);
  const std::int32_t ids[] = {1, 2, 3};
  auto ann = model.encode(ids, 3);
  auto state = model.init_decoder(ann);
  EXPECT_THROW(model.step(model.bos_id(), state, ann.h, Tensor<double>()),
               std::invalid_argument);
}

TEST(DecodeStep, DeterministicAndGradFlowsThroughBothHops) {
  Model<double> model(tiny_config(AttentionVariant::hybrid), 21);
  const std::int32_t ids[] = {2, 7, 1, 9, 4, 11};
  auto ann = model.encode(ids, 6);
  auto units = model.semantic_units(ann);
  auto state = model.init_decoder(ann);
  auto o1 = model.step(model.bos_id(), state, ann.h, units);
  auto o2 = model.step(model.bos_id(), state, ann.h, units);
  for (Dim i = 0; i < o1.probs.numel(); ++i)
    EXPECT_EQ(o1.probs.data()[i], o2.probs.data()[i]);

  // gradient flows into both attention memories
  Rng rng(3);
  auto words = random_t(Shape{5, 4}, rng);
  auto unit_mem = random_t(Shape{3, 2}, rng);
  auto wa_u = random_t(Shape{2, 2}, rng);
  auto wc_u = random_t(Shape{4, 2}, rng);
  auto wa_w = random_t(Shape{2, 4}, rng);
  auto wc_w = random_t(Shape{6, 2}, rng);
  auto w_out = random_t(Shape{2, 3}, rng);
  auto query = random_t(Shape{1, 2}, rng);
  auto two_hop_loss = [&](const Tensor<double>& m_units,
                          const Tensor<double>& m_words) {
    auto su = combine(query, attend(query, m_units, wa_u).context, wc_u);
    auto sw = combine(su, attend(su, m_words, wa_w).context, wc_w);
    return cross_entropy(matmul(add(su, sw), w_out), 1);
  };
  EXPECT_LT(grad_check<double>(
                [&](const Tensor<double>& x) { return two_hop_loss(x, words); },
                unit_mem, 1e-5),
            1e-4);
  EXPECT_LT(grad_check<double>(
                [&](const Tensor<double>& x) { return two_hop_loss(unit_mem, x); },
                words, 1e-5),
            1e-4);
}

TEST(Bridge, ZeroEncoderStatesGiveTanhBias) {
  Model<double> model(tiny_config(AttentionVariant::none), 5);
  Annotations<double> ann;
  ann.h = Tensor<double>(Shape{2, 12});
  ann.fwd_final = Tensor<double>(Shape{1, 6});
  ann.bwd_final = Tensor<double>(Shape{1, 6});
  ann.length = 2;
  auto state = model.init_decoder(ann);
  Tensor<double> bh, bc;
  for (auto& [name, p] : model.params()) {
    if (name == "bridge.bh") bh = p;
    if (name == "bridge.bc") bc = p;
  }
  for (Dim i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(state.h.at(0, i), std::tanh(bh.at(i)));
    EXPECT_DOUBLE_EQ(state.c.at(0, i), std::tanh(bc.at(i)));
  }
}

TEST(GreedyDecode, TerminationMaskingAndNoDuplicates) {
  // craft params so one label dominates: it must be emitted once, then masked
  const Dim h = 2, L = 3;
  DecoderParams<double> p;
  p.label_embed = Tensor<double>(Shape{L + 2, 2});
  p.lstm = LstmParams<double>::make(2, h);
  p.w_out = Tensor<double>(Shape{h, L + 1});
  // zero lstm -> s_t = 0; zero w_out -> uniform distribution; bias the output
  // by hand through w_out is impossible with s_t = 0, so craft the lstm bias
  for (Dim i = 0; i < 4 * h; ++i) p.lstm.b.data()[i] = 0.8;
  p.w_out.data()[0 * (L + 1) + 1] = 9.0;   // label 1 dominates via s_t[0]
  p.w_out.data()[0 * (L + 1) + 2] = 5.0;   // then label 2
  p.w_out.data()[0 * (L + 1) + 0] = 3.0;   // then label 0
  p.w_out.data()[0 * (L + 1) + 3] = 1.0;   // EOS last
  auto words = Tensor<double>(Shape{3, 2 * h}, 0.1);
  auto seq = greedy_decode(words, Tensor<double>(), AttentionVariant::none, p,
                           LstmState<double>::zero(h), L + 1, true);
  EXPECT_EQ(seq, (std::vector<std::int32_t>{1, 2, 0}));  // never [1,1,...]
  std::set<std::int32_t> uniq(seq.begin(), seq.end());
  EXPECT_EQ(uniq.size(), seq.size());
  EXPECT_LE(seq.size(), static_cast<std::size_t>(L));

  // EOS dominant at step 1 -> empty label set
  DecoderParams<double> q = p;
  q.w_out = Tensor<double>(Shape{h, L + 1});
  q.w_out.data()[0 * (L + 1) + 3] = 9.0;
  auto empty = greedy_decode(words, Tensor<double>(), AttentionVariant::none, q,
                             LstmState<double>::zero(h), L + 1, true);
  EXPECT_TRUE(empty.empty());
}

TEST(GreedyDecode, MaskDisabledAllowsRepeats) {
  const Dim h = 2, L = 3;
  DecoderParams<double> p;
  p.label_embed = Tensor<double>(Shape{L + 2, 2});
  p.lstm = LstmParams<double>::make(2, h);
  for (Dim i = 0; i < 4 * h; ++i) p.lstm.b.data()[i] = 0.8;
  p.w_out = Tensor<double>(Shape{h, L + 1});
  p.w_out.data()[0 * (L + 1) + 1] = 9.0;
  auto words = Tensor<double>(Shape{3, 2 * h}, 0.1);
  auto seq = greedy_decode(words, Tensor<double>(), AttentionVariant::none, p,
                           LstmState<double>::zero(h), L + 1, false);
  EXPECT_EQ(seq.size(), static_cast<std::size_t>(L + 1));
  for (auto id : seq) EXPECT_EQ(id, 1);
}

TEST(Variants, ParseAndNames) {
  EXPECT_EQ(parse_variant("hybrid"), AttentionVariant::hybrid);
  EXPECT_EQ(parse_variant("mdc_only"), AttentionVariant::mdc_only);
  EXPECT_THROW(parse_variant("typo"), std::invalid_argument);
  EXPECT_STREQ(variant_name(AttentionVariant::additive), "additive");
}
