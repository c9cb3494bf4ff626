// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "grad_check.hpp"
#include "w2v/model/context_network.hpp"
#include "w2v/ops.hpp"

using namespace w2v;

namespace {

TransformerConfig tiny_transformer() {
  TransformerConfig c;
  c.input_dim = 4;
  c.layers = 2;
  c.dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.pos_kernel = 4;
  c.pos_groups = 2;
  return c;
}

Tensor random_matrix(int64_t rows, int64_t cols, uint64_t seed) {
  Rng rng(seed);
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace

TEST(SampleMask, SpanCounts) {
  Rng rng(1);
  const auto m = sample_mask(100, 0.5, 10, rng);
  EXPECT_EQ(m.num_spans, 5);
  EXPECT_FALSE(m.skip);
  EXPECT_GE(m.indices.size(), 10u);
  EXPECT_LE(m.indices.size(), 50u);
  EXPECT_EQ(sample_mask(41, 0.5, 10, rng).num_spans, 2);
  const auto empty = sample_mask(19, 0.5, 10, rng);
  EXPECT_EQ(empty.num_spans, 0);
  EXPECT_TRUE(empty.skip);
  EXPECT_TRUE(empty.indices.empty());
  EXPECT_EQ(mask_span_count(200, 0.05, 10), 1);
  EXPECT_THROW(sample_mask(0, 0.5, 10, rng), std::invalid_argument);
}

TEST(SampleMask, FullCoverageIffNoOverlapOrClipping) {
  Rng rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto m = sample_mask(100, 0.5, 10, rng);
    bool disjoint = true;
    for (size_t i = 0; i < m.starts.size(); ++i) {
      if (m.starts[i] + 10 > 100) disjoint = false;
      if (i > 0 && m.starts[i] < m.starts[i - 1] + 10) disjoint = false;
    }
    ASSERT_EQ(m.indices.size() == 50u, disjoint);
  }
}

TEST(SampleMask, StructuralProperties) {
  Rng rng(3);
  for (int64_t t : {1, 5, 10, 23, 64, 150}) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto m = sample_mask(t, 0.5, 10, rng);
      ASSERT_TRUE(std::is_sorted(m.indices.begin(), m.indices.end()));
      ASSERT_EQ(std::adjacent_find(m.indices.begin(), m.indices.end()), m.indices.end());
      for (int64_t i : m.indices) ASSERT_TRUE(i >= 0 && i < t);
      ASSERT_EQ(static_cast<int64_t>(m.starts.size()), m.num_spans);
      ASSERT_LE(static_cast<int64_t>(m.indices.size()), m.num_spans * 10);
      // Every span contributes its clipped length; spans never starting within
      // L_m of the end cover a full L_m frames.
      int64_t longest = 0;
      for (int64_t s : m.starts) longest = std::max(longest, std::min<int64_t>(10, t - s));
      ASSERT_GE(static_cast<int64_t>(m.indices.size()), longest);
      if (!m.starts.empty() && m.starts.front() + 10 <= t) {
        ASSERT_GE(m.indices.size(), 10u);
      }
    }
  }
}

TEST(ApplyMask, ReplacesExactlyTheListedRows) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  const Variable x = ops::constant(random_matrix(6, 8, 2));
  EXPECT_EQ(net.apply_mask(x, MaskSpec{}).value(), x.value());

  MaskSpec all;
  all.indices = {0, 1, 2, 3, 4, 5};
  const Tensor masked = net.apply_mask(x, all).value();
  for (int64_t t = 0; t < 6; ++t)
    for (int64_t j = 0; j < 8; ++j) EXPECT_EQ(masked.at(t, j), net.mask_vector().value()[j]);

  MaskSpec one;
  one.indices = {3};
  const Tensor single = net.apply_mask(x, one).value();
  int differing = 0;
  for (int64_t t = 0; t < 6; ++t) {
    bool same = true;
    for (int64_t j = 0; j < 8; ++j) same = same && single.at(t, j) == x.value().at(t, j);
    differing += same ? 0 : 1;
  }
  EXPECT_EQ(differing, 1);
}

TEST(RelativePosEmbedding, ZeroInputLengthAndShift) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  const Tensor zero_out = net.relative_pos_embedding(ops::constant(Tensor({7, 8}, 0.0))).value();
  for (double v : zero_out.values()) EXPECT_EQ(v, 0.0);
  for (int64_t t : {1, 41, 50}) {
    EXPECT_EQ(net.relative_pos_embedding(ops::constant(random_matrix(t, 8, 3))).value().dim(0), t);
  }
  // Canonical kernel 128 / padding 64 on the canonical width also keeps the length.
  TransformerConfig canonical;
  canonical.layers = 1;
  ParameterStore big;
  ContextNetwork wide(canonical, big, rng);
  EXPECT_EQ(wide.relative_pos_embedding(ops::constant(random_matrix(50, 768, 4))).value().dim(0), 50);

  const int64_t t = 30;
  const int64_t s = 3;
  const Tensor x = random_matrix(t, 8, 5);
  Tensor shifted({t, 8}, 0.0);
  for (int64_t i = 0; i + s < t; ++i)
    for (int64_t j = 0; j < 8; ++j) shifted.at(i + s, j) = x.at(i, j);
  const Tensor a = net.relative_pos_embedding(ops::constant(x)).value();
  const Tensor b = net.relative_pos_embedding(ops::constant(shifted)).value();
  // Kernel 4 with padding 2 reads frames i-2..i+1.
  for (int64_t i = 2; i + 1 < t - s; ++i)
    for (int64_t j = 0; j < 8; ++j) EXPECT_NEAR(b.at(i + s, j), a.at(i, j), 1e-12);
}

TEST(Contextualize, DeterministicWithoutDropout) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  const Variable x = ops::constant(random_matrix(9, 8, 2));
  EXPECT_EQ(net.contextualize(x, 9).value(), net.contextualize(x, 9).value());
  Rng d1(4);
  Rng d2(4);
  EXPECT_EQ(net.contextualize(x, 9, &d1).value(), net.contextualize(x, 9, &d2).value());
  Rng d3(5);
  EXPECT_NE(net.contextualize(x, 9, &d3).value(), net.contextualize(x, 9).value());
}

TEST(Contextualize, PaddingInvariance) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  const Tensor x = random_matrix(12, 8, 2);
  const Tensor padded_in = random_matrix(17, 8, 3);
  Tensor padded = padded_in;
  for (int64_t t = 0; t < 12; ++t)
    for (int64_t j = 0; j < 8; ++j) padded.at(t, j) = x.at(t, j);
  const Tensor a = net.contextualize(ops::constant(x), 12).value();
  const Tensor b = net.contextualize(ops::constant(padded), 12).value();
  for (int64_t t = 0; t < 12; ++t)
    for (int64_t j = 0; j < 8; ++j) EXPECT_NEAR(a.at(t, j), b.at(t, j), 1e-6);
}

TEST(Contextualize, AllPaddingRejected) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  EXPECT_THROW(net.contextualize(ops::constant(random_matrix(4, 8, 2)), 0), std::invalid_argument);
}

TEST(Contextualize, GradientMatchesFiniteDifferences) {
  ParameterStore store;
  Rng rng(1);
  ContextNetwork net(tiny_transformer(), store, rng);
  const Tensor z = random_matrix(7, 4, 2);
  const Tensor proj = random_matrix(7, 8, 3);
  MaskSpec mask;
  mask.indices = {1, 2, 5};
  const auto result = test::check_parameter_gradients(store, [&] {
    Rng dropout(9);
    const Variable x = net.apply_mask(net.project(ops::constant(z)), mask);
    return ops::sum(ops::mul(net.contextualize(x, 6, &dropout), ops::constant(proj)));
  });
  EXPECT_LT(result.relative_error, 1e-5);
  EXPECT_GT(result.checked, 500);
}
