// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "w2v/train/optimizer.hpp"
#include "w2v/train/schedule.hpp"

using namespace w2v;

namespace {

// Three significant figures in the same style as the printed table.
std::string sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

}  // namespace

TEST(LrHeuristic, MatchesTheBatchSizeTable) {
  struct Row {
    double seconds;
    const char* sub;
    const char* lin;
  };
  const Row rows[] = {{87.5, "6.04e-05", "7.29e-06"}, {150, "7.91e-05", "1.25e-05"}, {300, "1.12e-04", "2.50e-05"},
                      {600, "1.58e-04", "5.00e-05"},  {1200, "2.24e-04", "1.00e-04"}, {2400, "3.16e-04", "2.00e-04"}};
  for (const auto& r : rows) {
    EXPECT_EQ(sig3(lr_heuristic(r.seconds, LrHeuristic::kSub)), r.sub) << r.seconds;
    EXPECT_EQ(sig3(lr_heuristic(r.seconds, LrHeuristic::kLin)), r.lin) << r.seconds;
    EXPECT_EQ(lr_heuristic(r.seconds, LrHeuristic::kConst), 5e-4);
  }
  EXPECT_DOUBLE_EQ(lr_heuristic(6000, LrHeuristic::kLin), 5e-4);
  EXPECT_DOUBLE_EQ(lr_heuristic(6000, LrHeuristic::kSub), 5e-4);
  EXPECT_THROW(lr_heuristic(0.0, LrHeuristic::kLin), std::invalid_argument);
  EXPECT_EQ(parse_lr_heuristic("sub"), LrHeuristic::kSub);
  EXPECT_THROW(parse_lr_heuristic("sqrt"), std::invalid_argument);
}

TEST(CyclicLr, TriangleEndpoints) {
  const CyclicLr lr(1e-3, 25000);
  EXPECT_DOUBLE_EQ(lr(0), 1e-5);
  EXPECT_DOUBLE_EQ(lr(25000), 1e-3);
  EXPECT_DOUBLE_EQ(lr(50000), 1e-5);
  EXPECT_DOUBLE_EQ(lr(12500), 1e-5 + 0.5 * (1e-3 - 1e-5));
  EXPECT_DOUBLE_EQ(lr(37500), lr(12500));
  EXPECT_EQ(lr.total_steps(), 400000);
  EXPECT_DOUBLE_EQ(lr(400000), 1e-5);
  EXPECT_DOUBLE_EQ(lr(10'000'000), 1e-5);
}

TEST(CyclicLr, PeriodicBoundedContinuousAndPeaksOncePerCycle) {
  const CyclicLr lr(2e-3, 125);
  int peaks = 0;
  const double slope = (lr.max_lr() - lr.base_lr()) / 125.0;
  for (int64_t s = 0; s <= lr.total_steps(); ++s) {
    const double v = lr(s);
    EXPECT_GE(v, lr.base_lr());
    EXPECT_LE(v, lr.max_lr());
    peaks += v == lr.max_lr();
    if (s > 0) EXPECT_LE(std::abs(v - lr(s - 1)), slope * (1 + 1e-9));
    if (s + 250 < lr.total_steps()) EXPECT_NEAR(v, lr(s + 250), 1e-18);
  }
  EXPECT_EQ(peaks, 8);
}

TEST(TriStageLr, PhasesAndEndpoints) {
  const TriStageLr lr(10000);
  EXPECT_DOUBLE_EQ(lr(0), 5e-7);
  EXPECT_DOUBLE_EQ(lr(3000), 5e-5);
  EXPECT_NEAR(lr(10000), 2.5e-6, 2.5e-6 * 1e-12);
  double peak = 0.0;
  for (int64_t s = 0; s <= 10000; ++s) {
    peak = std::max(peak, lr(s));
    EXPECT_GE(lr(s), 5e-7);
    EXPECT_LE(lr(s), 5e-5);
    if (s > 0) EXPECT_LT(std::abs(lr(s) - lr(s - 1)), 5e-5 / 1000.0 + 1e-12);
  }
  EXPECT_EQ(peak, 5e-5);
  // Exponential phase: equal steps multiply by the same factor.
  EXPECT_NEAR(lr(6000) / lr(5500), lr(9500) / lr(9000), 1e-12);
  EXPECT_THROW(TriStageLr(0), std::invalid_argument);
}

TEST(AdamW, MatchesHandComputedSteps) {
  ParameterStore store;
  Variable w = store.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  AdamW opt(store, {0.9, 0.98, 1e-6, 0.01});
  const double grads[2][3] = {{0.1, -0.3, 2.0}, {-0.2, 0.4, 0.0}};
  double p[3] = {1.0, -2.0, 0.5}, m[3] = {}, v[3] = {};
  const double lr = 0.05;
  for (int t = 1; t <= 2; ++t) {
    store.zero_grad();
    w.grad() = Tensor::vector({grads[t - 1][0], grads[t - 1][1], grads[t - 1][2]});
    opt.step(lr);
    for (int j = 0; j < 3; ++j) {
      const double g = grads[t - 1][j];
      m[j] = 0.9 * m[j] + 0.1 * g;
      v[j] = 0.98 * v[j] + 0.02 * g * g;
      const double mh = m[j] / (1 - std::pow(0.9, t));
      const double vh = v[j] / (1 - std::pow(0.98, t));
      p[j] = p[j] - lr * (mh / (std::sqrt(vh) + 1e-6) + 0.01 * p[j]);
      EXPECT_NEAR(w.value()[j], p[j], 1e-15) << "t=" << t << " j=" << j;
    }
  }
  EXPECT_EQ(opt.step_counts()[0], 2);
}

TEST(AdamW, FrozenParametersAreUntouched) {
  ParameterStore store;
  Variable a = store.add("encoder.w", Tensor::vector({1.0, 2.0}));
  Variable b = store.add("head.w", Tensor::vector({3.0}));
  AdamW opt(store);
  a.grad() = Tensor::vector({1.0, 1.0});
  b.grad() = Tensor::vector({1.0});
  opt.step(0.1, [](const std::string& name) { return name.rfind("encoder.", 0) != 0; });
  EXPECT_EQ(a.value(), Tensor::vector({1.0, 2.0}));
  EXPECT_NE(b.value()[0], 3.0);
  EXPECT_EQ(opt.step_counts()[0], 0);
  EXPECT_EQ(opt.step_counts()[1], 1);
}
