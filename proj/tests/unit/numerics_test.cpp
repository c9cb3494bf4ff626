// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "w2v/finite_diff.hpp"
#include "w2v/ops.hpp"

using namespace w2v;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal() * scale;
  return t;
}

// Checks d(sum(w * f(inputs)))/d(inputs) from reverse mode against central
// differences, with a fixed random projection w so every output matters.
void expect_gradients_match(const std::function<Variable(std::vector<Variable>&)>& fn, std::vector<Tensor> inputs,
                            uint64_t seed, double tol = 1e-5) {
  std::vector<Variable> vars;
  for (auto& t : inputs) vars.emplace_back(t, true);
  Variable out = fn(vars);
  Rng rng(seed);
  Tensor proj = random_tensor(out.shape(), rng);

  auto objective = [&]() {
    std::vector<Variable> consts;
    for (auto& v : vars) consts.emplace_back(v.value(), false);
    Variable o = fn(consts);
    double s = 0.0;
    for (int64_t i = 0; i < o.value().size(); ++i) s += proj[i] * o.value()[i];
    return s;
  };

  ops::sum(ops::mul(out, ops::constant(proj))).backward();
  for (size_t i = 0; i < vars.size(); ++i) {
    Tensor numeric = finite_diff_grad(objective, vars[i].value(), 1e-6);
    ASSERT_TRUE(vars[i].has_grad()) << "input " << i;
    EXPECT_LT(relative_error(vars[i].grad().values(), numeric.values()), tol) << "input " << i;
  }
}

}  // namespace

TEST(Gelu, FixedPointAndAsymptote) {
  EXPECT_EQ(ops::gelu_tanh(0.0), 0.0);
  EXPECT_NEAR(ops::gelu_tanh(10.0), 10.0, 1e-4);
}

TEST(Gelu, MatchesExtendedPrecisionClosedForm) {
  // 40-digit evaluation of the tanh approximation.
  EXPECT_NEAR(ops::gelu_tanh(1.0), 0.8411919906082767047819957770451838608258, 1e-15);
  EXPECT_NEAR(ops::gelu_tanh(-2.0), -0.04540230591222498121895861384928096035793, 1e-15);
}

TEST(Gelu, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  expect_gradients_match([](auto& v) { return ops::gelu_tanh(v[0]); }, {random_tensor({3, 4}, rng, 2.0)}, 11);
}

TEST(LayerNorm, ConstantVectorGivesZeros) {
  Variable x(Tensor::matrix(1, 4, {2.5, 2.5, 2.5, 2.5}));
  Variable out = ops::layer_norm(x, Variable(Tensor({4}, 1.0)), Variable(Tensor({4}, 0.0)));
  for (double v : out.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, PlusMinusOneIsFixed) {
  Variable x(Tensor::matrix(1, 2, {1.0, -1.0}));
  Variable out = ops::layer_norm(x, Variable(Tensor({2}, 1.0)), Variable(Tensor({2}, 0.0)));
  EXPECT_NEAR(out.value()[0], 1.0, 1e-5);
  EXPECT_NEAR(out.value()[1], -1.0, 1e-5);
}

TEST(LayerNorm, RejectsLengthOne) {
  Variable x(Tensor::matrix(1, 1, {1.0}));
  EXPECT_THROW(ops::layer_norm(x, Variable(Tensor({1}, 1.0)), Variable(Tensor({1}, 0.0))), std::invalid_argument);
}

TEST(LayerNorm, MeanEqualsBiasAndVarianceEqualsGainSquared) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t d = rng.uniform_int(2, 16);
    const double gain = rng.uniform(0.5, 2.0);
    const double bias = rng.normal();
    Tensor x = random_tensor({3, d}, rng, 5.0);
    Variable out = ops::layer_norm(Variable(x), Variable(Tensor({d}, gain)), Variable(Tensor({d}, bias)));
    for (int64_t r = 0; r < 3; ++r) {
      double mu = 0.0, var = 0.0;
      for (int64_t j = 0; j < d; ++j) mu += out.value().at(r, j);
      mu /= static_cast<double>(d);
      for (int64_t j = 0; j < d; ++j) var += std::pow(out.value().at(r, j) - mu, 2);
      var /= static_cast<double>(d);
      EXPECT_NEAR(mu, bias, 1e-7);
      // eps = 1e-5 shrinks the variance slightly; inputs have variance >> eps.
      EXPECT_NEAR(var, gain * gain, 1e-5 * gain * gain * 10);
    }
  }
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  expect_gradients_match([](auto& v) { return ops::layer_norm(v[0], v[1], v[2]); },
                         {random_tensor({3, 5}, rng), random_tensor({5}, rng), random_tensor({5}, rng)}, 12);
}

TEST(GroupNorm, ConstantChannelGivesZeros) {
  Variable x(Tensor::matrix(3, 1, {4.0, 4.0, 4.0}));
  Variable out = ops::group_norm(x, 1, Variable(Tensor({1}, 1.0)), Variable(Tensor({1}, 0.0)));
  for (double v : out.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(GroupNorm, HandNormalizedTwoChannels) {
  // channels x time ((1,3),(0,0)) stored time-major
  Variable x(Tensor::matrix(2, 2, {1.0, 0.0, 3.0, 0.0}));
  Variable out = ops::group_norm(x, 2, Variable(Tensor({2}, 1.0)), Variable(Tensor({2}, 0.0)));
  EXPECT_NEAR(out.value().at(0, 0), -1.0, 1e-5);
  EXPECT_NEAR(out.value().at(1, 0), 1.0, 1e-5);
  EXPECT_EQ(out.value().at(0, 1), 0.0);
  EXPECT_EQ(out.value().at(1, 1), 0.0);
}

TEST(GroupNorm, TimeLengthOneIsGuarded) {
  Variable x(Tensor::matrix(1, 2, {3.0, -7.0}));
  Variable out = ops::group_norm(x, 2, Variable(Tensor({2}, 1.0)), Variable(Tensor({2}, 0.0)));
  for (double v : out.value().values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(GroupNorm, PerChannelEqualsLayerNormOverTime) {
  Rng rng(5);
  Tensor x = random_tensor({7, 3}, rng);
  Tensor gain = random_tensor({3}, rng);
  Tensor bias = random_tensor({3}, rng);
  Variable gn = ops::group_norm(Variable(x), 3, Variable(gain), Variable(bias));
  for (int64_t c = 0; c < 3; ++c) {
    Tensor row({1, 7});
    for (int64_t t = 0; t < 7; ++t) row[t] = x.at(t, c);
    Variable ln = ops::layer_norm(Variable(row), Variable(Tensor({7}, gain[c])), Variable(Tensor({7}, bias[c])));
    for (int64_t t = 0; t < 7; ++t) EXPECT_NEAR(gn.value().at(t, c), ln.value()[t], 1e-12);
  }
}

TEST(GroupNorm, GroupStatisticsProperty) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t groups = rng.uniform_int(1, 4);
    const int64_t channels = groups * rng.uniform_int(1, 3);
    const int64_t time = rng.uniform_int(3, 12);
    const double gain = rng.uniform(0.5, 2.0);
    const double bias = rng.normal();
    Tensor x = random_tensor({time, channels}, rng, 3.0);
    Variable out = ops::group_norm(Variable(x), groups, Variable(Tensor({channels}, gain)),
                                   Variable(Tensor({channels}, bias)));
    const int64_t per = channels / groups;
    for (int64_t g = 0; g < groups; ++g) {
      double mu = 0.0, var = 0.0;
      const double n = static_cast<double>(time * per);
      for (int64_t t = 0; t < time; ++t)
        for (int64_t c = g * per; c < (g + 1) * per; ++c) mu += out.value().at(t, c);
      mu /= n;
      for (int64_t t = 0; t < time; ++t)
        for (int64_t c = g * per; c < (g + 1) * per; ++c) var += std::pow(out.value().at(t, c) - mu, 2);
      var /= n;
      EXPECT_NEAR(mu, bias, 1e-7);
      EXPECT_NEAR(var, gain * gain, 1e-4 * gain * gain);
    }
  }
}

TEST(GroupNorm, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  expect_gradients_match([](auto& v) { return ops::group_norm(v[0], 2, v[1], v[2]); },
                         {random_tensor({5, 4}, rng), random_tensor({4}, rng), random_tensor({4}, rng)}, 13);
}

TEST(GumbelSoftmax, HardIsOneHotAndSoftIsDistribution) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    Variable logits(random_tensor({3, 6}, rng, 3.0));
    auto s = ops::gumbel_softmax(logits, rng.uniform(0.1, 3.0), rng);
    for (int64_t r = 0; r < 3; ++r) {
      double hard_sum = 0.0, soft_sum = 0.0;
      int ones = 0;
      for (int64_t c = 0; c < 6; ++c) {
        const double h = s.hard.at(r, c);
        EXPECT_TRUE(h == 0.0 || h == 1.0);
        ones += h == 1.0;
        hard_sum += h;
        soft_sum += s.soft.value().at(r, c);
        EXPECT_GE(s.soft.value().at(r, c), 0.0);
        EXPECT_LE(s.soft.value().at(r, c), 1.0);
      }
      EXPECT_EQ(ones, 1);
      EXPECT_EQ(hard_sum, 1.0);
      EXPECT_NEAR(soft_sum, 1.0, 1e-9);
    }
  }
}

TEST(GumbelSoftmax, DominantLogitIsAlwaysSelected) {
  Rng rng(9);
  Variable logits(Tensor::matrix(1, 3, {100.0, 0.0, 0.0}));
  int hits = 0;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) hits += ops::gumbel_softmax(logits, 0.5, rng).hard[0] == 1.0;
  // Gumbel noise would need a gap of 100 with u clamped at 1e-12 (max noise ~27.6).
  EXPECT_EQ(hits, kDraws);
}

TEST(GumbelSoftmax, LargeTemperatureSoftIsNearUniform) {
  Rng rng(10);
  constexpr int kV = 5;
  constexpr int kDraws = 10000;
  Variable logits(Tensor({1, kV}, 0.0));
  std::vector<double> avg(kV, 0.0);
  for (int i = 0; i < kDraws; ++i) {
    auto s = ops::gumbel_softmax(logits, 100.0, rng);
    for (int c = 0; c < kV; ++c) avg[c] += s.soft.value()[c] / kDraws;
  }
  for (double a : avg) EXPECT_NEAR(a, 1.0 / kV, 1e-2);
}

TEST(GumbelSoftmax, StraightThroughForwardIsHardBackwardIsSoft) {
  Rng rng(11);
  Variable logits(random_tensor({2, 4}, rng), true);
  auto s = ops::gumbel_softmax(logits, 1.0, rng);
  Variable st = ops::straight_through(s.hard, s.soft);
  EXPECT_EQ(st.value(), s.hard);
  Tensor w = random_tensor({2, 4}, rng);
  ops::sum(ops::mul(st, ops::constant(w))).backward();
  const Tensor through_hard = logits.grad();
  logits.zero_grad();
  ops::sum(ops::mul(s.soft, ops::constant(w))).backward();
  EXPECT_EQ(through_hard, logits.grad());
}

TEST(WeightNorm, UnitDirectionWithUnitMagnitudeIsIdentity) {
  Tensor v = Tensor::matrix(2, 1, {0.6, 0.8});
  Variable out = ops::weight_norm(Variable(v), Variable(Tensor({1}, 1.0)));
  EXPECT_NEAR(out.value()[0], 0.6, 1e-15);
  EXPECT_NEAR(out.value()[1], 0.8, 1e-15);
}

TEST(WeightNorm, ScaleInvariantInDirection) {
  Rng rng(12);
  Tensor v = random_tensor({3, 2, 4}, rng);
  Tensor g = random_tensor({4}, rng);
  Tensor v7 = v;
  v7 *= 7.0;
  Variable a = ops::weight_norm(Variable(v), Variable(g));
  Variable b = ops::weight_norm(Variable(v7), Variable(g));
  for (int64_t i = 0; i < a.value().size(); ++i) EXPECT_NEAR(a.value()[i], b.value()[i], 1e-14);
}

TEST(WeightNorm, ZeroMagnitudeGivesZeroKernel) {
  Rng rng(13);
  Variable out = ops::weight_norm(Variable(random_tensor({2, 3}, rng)), Variable(Tensor({3}, 0.0)));
  for (double v : out.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(WeightNorm, ZeroDirectionIsAnError) {
  EXPECT_THROW(ops::weight_norm(Variable(Tensor({2, 1}, 0.0)), Variable(Tensor({1}, 1.0))), std::invalid_argument);
}

TEST(WeightNorm, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  expect_gradients_match([](auto& v) { return ops::weight_norm(v[0], v[1]); },
                         {random_tensor({3, 2, 4}, rng), random_tensor({4}, rng)}, 15);
}

TEST(FiniteDiff, Polynomial) {
  auto g = finite_diff_grad([](std::span<const double> x) { return x[0] * x[0]; }, std::vector<double>{3.0}, 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, SumOfSquares) {
  auto g = finite_diff_grad(
      [](std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); },
      std::vector<double>{1.0, 2.0, 3.0}, 1e-5);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
  EXPECT_NEAR(g[2], 6.0, 1e-6);
}

TEST(FiniteDiff, NonFiniteIsAnError) {
  EXPECT_THROW(finite_diff_grad([](std::span<const double> x) { return std::log(x[0]); }, std::vector<double>{0.0},
                                1e-5),
               std::domain_error);
}

TEST(Softmax, RowsAreDistributions) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor p = ops::softmax_rows(random_tensor({4, 9}, rng, 10.0));
    for (int64_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (int64_t c = 0; c < 9; ++c) {
        EXPECT_GE(p.at(r, c), 0.0);
        EXPECT_LE(p.at(r, c), 1.0);
        s += p.at(r, c);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Conv1d, MatchesDirectSum) {
  Rng rng(16);
  Tensor x = random_tensor({9, 4}, rng);
  Tensor w = random_tensor({3, 2, 6}, rng);
  Tensor b = random_tensor({6}, rng);
  Variable out = ops::conv1d(Variable(x), Variable(w), Variable(b), 2, 1, 2);
  ASSERT_EQ(out.value().rows(), ops::conv_output_length(9, 3, 2, 1));
  for (int64_t t = 0; t < out.value().rows(); ++t) {
    for (int64_t o = 0; o < 6; ++o) {
      const int64_t g = o / 3;
      double ref = b[o];
      for (int64_t k = 0; k < 3; ++k) {
        const int64_t src = t * 2 + k - 1;
        if (src < 0 || src >= 9) continue;
        for (int64_t c = 0; c < 2; ++c) ref += x.at(src, g * 2 + c) * w[(k * 2 + c) * 6 + o];
      }
      EXPECT_NEAR(out.value().at(t, o), ref, 1e-12);
    }
  }
}

TEST(Conv1d, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  expect_gradients_match([](auto& v) { return ops::conv1d(v[0], v[1], v[2], 2, 1, 1); },
                         {random_tensor({11, 3}, rng), random_tensor({3, 3, 4}, rng), random_tensor({4}, rng)}, 18);
  expect_gradients_match([](auto& v) { return ops::conv1d(v[0], v[1], v[2], 1, 2, 2); },
                         {random_tensor({6, 4}, rng), random_tensor({4, 2, 4}, rng), random_tensor({4}, rng)}, 19);
}

TEST(GradScale, ForwardIdentityBackwardScaled) {
  Variable x(Tensor::vector({1.5, -2.0}), true);
  Variable y = ops::grad_scale(x, 0.1);
  EXPECT_EQ(y.value(), x.value());
  ops::sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.1);
  EXPECT_DOUBLE_EQ(x.grad()[1], 0.1);
}

TEST(GradScale, UnitFactorIsIdentity) {
  Variable x(Tensor::vector({3.0}), true);
  ops::sum(ops::grad_scale(x, 1.0)).backward();
  EXPECT_EQ(x.grad()[0], 1.0);
}

TEST(Attention, PaddedKeysGetZeroWeight) {
  Rng rng(20);
  Variable q(random_tensor({6, 4}, rng)), k(random_tensor({6, 4}, rng)), v(random_tensor({6, 4}, rng));
  Tensor weights;
  ops::attention(q, k, v, 2, 4, 0.0, nullptr, &weights);
  for (int64_t h = 0; h < 2; ++h) {
    for (int64_t t = 0; t < 6; ++t) {
      double s = 0.0;
      for (int64_t j = 0; j < 6; ++j) {
        const double w = weights[(h * 6 + t) * 6 + j];
        if (j >= 4) EXPECT_EQ(w, 0.0);
        s += w;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Attention, AllPaddedIsAnError) {
  Variable x(Tensor({3, 4}, 1.0));
  EXPECT_THROW(ops::attention(x, x, x, 2, 0), std::invalid_argument);
}

TEST(Attention, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  expect_gradients_match([](auto& v) { return ops::attention(v[0], v[1], v[2], 2, 4); },
                         {random_tensor({5, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5, 4}, rng)}, 22);
}

TEST(Attention, DropoutGradientMatchesFiniteDifferences) {
  Rng rng(23);
  // Re-seeding inside fn keeps the dropout pattern fixed across evaluations.
  expect_gradients_match(
      [](auto& v) {
        Rng local(99);
        return ops::attention(v[0], v[1], v[2], 2, 5, 0.3, &local);
      },
      {random_tensor({5, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5, 4}, rng)}, 24);
}

TEST(Ops, ElementaryGradientsMatchFiniteDifferences) {
  Rng rng(25);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({3, 4}, rng);
  auto row = random_tensor({4}, rng);
  auto w = random_tensor({4, 2}, rng);
  expect_gradients_match([](auto& v) { return ops::mul(ops::sub(v[0], v[1]), ops::add(v[0], v[1])); }, {a, b}, 26);
  expect_gradients_match([](auto& v) { return ops::linear(v[0], v[1], v[2]); }, {a, w, random_tensor({2}, rng)}, 27);
  expect_gradients_match([](auto& v) { return ops::add_row(v[0], v[1]); }, {a, row}, 28);
  expect_gradients_match([](auto& v) { return ops::softmax_rows(v[0]); }, {a}, 29);
  expect_gradients_match([](auto& v) { return ops::log_softmax_rows(v[0]); }, {a}, 30);
  expect_gradients_match([](auto& v) { return ops::l2_normalize_rows(v[0]); }, {a}, 31);
  expect_gradients_match([](auto& v) { return ops::rowwise_dot(v[0], v[1]); }, {a, b}, 32);
  expect_gradients_match([](auto& v) { return ops::concat_cols(v[0], v[1]); }, {a, b}, 33);
  expect_gradients_match([](auto& v) { return ops::concat_rows({v[0], v[1]}); }, {a, b}, 34);
  expect_gradients_match([](auto& v) { return ops::slice_cols(ops::slice_rows(v[0], 1, 3), 1, 4); }, {a}, 35);
  const std::vector<int64_t> idx{2, 0, 2};
  expect_gradients_match([&](auto& v) { return ops::gather_rows(v[0], idx); }, {a}, 36);
  const std::vector<int64_t> masked{1};
  expect_gradients_match([&](auto& v) { return ops::replace_rows(v[0], v[1], masked); }, {a, row}, 37);
  expect_gradients_match([](auto& v) { return ops::zero_rows_from(v[0], 2); }, {a}, 38);
  expect_gradients_match([](auto& v) { return ops::mean_rows(v[0]); }, {a}, 39);
  expect_gradients_match([](auto& v) { return ops::mean_square(v[0]); }, {a}, 40);
  const std::vector<int64_t> targets{0, 3, 1};
  expect_gradients_match([&](auto& v) { return ops::cross_entropy_sum(v[0], targets); }, {a}, 41);
  expect_gradients_match([](auto& v) { return ops::perplexity(ops::mean_rows(ops::softmax_rows(v[0]))); }, {a}, 42);
}

TEST(Rng, DeterministicAndForkIndependent) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng f1 = a.fork(1), f2 = a.fork(1), f3 = a.fork(2);
  EXPECT_EQ(f1.next_u64(), f2.next_u64());
  EXPECT_NE(Rng(a.fork(1)).next_u64(), f3.next_u64());
  Rng c(7);
  c.uniform();
  Rng d(0);
  d.set_state(c.state());
  EXPECT_EQ(c.next_u64(), d.next_u64());
}
