// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "clvr/stats.hpp"
#include "test_util.hpp"

namespace {

using namespace clvr;
using namespace clvr::stats;
using clvr::testing::error_code;
using clvr::testing::make_trajectory;

// Wilson bounds written out from the score-test inversion.
Interval wilson_oracle(double p, double n, double z) {
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TEST(Z, Table) {
  EXPECT_DOUBLE_EQ(z_for(0.95), 1.959964);
  EXPECT_NEAR(z_for(0.90), 1.644854, 1e-6);
  EXPECT_NEAR(z_for(0.99), 2.575829, 1e-6);
  EXPECT_EQ(error_code([] { z_for(0.5); }), "bad_confidence");
}

TEST(SeBinomial, Examples) {
  EXPECT_DOUBLE_EQ(se_binomial(0.5, 100), 0.05);
  EXPECT_EQ(se_binomial(0.0, 17), 0.0);
  EXPECT_NEAR(se_binomial(0.8645, 553), std::sqrt(0.8645 * 0.1355 / 553), 1e-15);
  EXPECT_NEAR(se_binomial(0.8645, 553), 0.0146, 0.0003);
  EXPECT_EQ(error_code([] { se_binomial(0.5, 0); }), "bad_n");
  EXPECT_EQ(error_code([] { se_binomial(1.5, 10); }), "bad_p");
}

TEST(Wilson, TableRow) {
  const auto ci = wilson_interval(0.8645, 553, 0.95);
  EXPECT_NEAR(ci.low, 0.8333, 0.0015);
  EXPECT_NEAR(ci.high, 0.8904, 0.0015);
}

TEST(Wilson, ZeroSuccesses) {
  const double z = 1.959964;
  const auto ci = wilson_interval(0.0, 10);
  EXPECT_EQ(ci.low, 0.0);
  EXPECT_NEAR(ci.high, z * z / (10 + z * z), 1e-12);
  EXPECT_NEAR(ci.high, 0.2775, 1e-4);
}

TEST(Wilson, LargeNConvergesToWald) {
  const auto ci = wilson_interval(0.5, 1000000);
  EXPECT_LT(ci.high - ci.low, 0.002);
  EXPECT_NEAR(ci.low + ci.high, 1.0, 1e-12);
  const double se = se_binomial(0.5, 1000000);
  EXPECT_NEAR(ci.low, 0.5 - 1.959964 * se, 1e-3);
  EXPECT_NEAR(ci.high, 0.5 + 1.959964 * se, 1e-3);
}

TEST(Wilson, OracleAndContainment) {
  CounterRng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const auto n = rng.between(1, 5000);
    const double p = double(rng.between(0, n)) / double(n);
    for (double conf : {0.90, 0.95, 0.99}) {
      const auto ci = wilson_interval(p, n, conf);
      const auto o = wilson_oracle(p, double(n), z_for(conf));
      ASSERT_NEAR(ci.low, o.low, 1e-12);
      ASSERT_NEAR(ci.high, o.high, 1e-12);
      const double z2 = z_for(conf) * z_for(conf);
      const double center = (p + z2 / (2.0 * double(n))) / (1 + z2 / double(n));
      ASSERT_LE(ci.low, center + 1e-15);
      ASSERT_GE(ci.high, center - 1e-15);
      ASSERT_GE(ci.low, 0.0);
      ASSERT_LE(ci.high, 1.0);
    }
  }
}

TEST(Summary, Fields) {
  const auto s = summarize_binomial(0.8645, 553);
  EXPECT_EQ(s.n, 553);
  EXPECT_DOUBLE_EQ(s.se, se_binomial(0.8645, 553));
  EXPECT_LE(s.ci_low, s.ci_high);
}

TEST(SeMean, Examples) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_NEAR(se_mean(v), std::sqrt(2.5) / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(se_mean(v), 0.7071, 1e-4);
  const std::vector<double> same(7, 0.3);
  EXPECT_EQ(se_mean(same), 0.0);
  const auto ci = normal_ci(0.3, 0.0);
  EXPECT_EQ(ci.low, 0.3);
  EXPECT_EQ(ci.high, 0.3);
  const std::vector<double> one{1.0};
  EXPECT_EQ(error_code([&] { se_mean(one); }), "too_few_values");
}

TEST(NormalCi, TableRow) {
  const auto ci = normal_ci(0.7405, 0.0093);
  EXPECT_NEAR(ci.low, 0.7223, 0.0002);
  EXPECT_NEAR(ci.high, 0.7588, 0.0002);
}

TEST(Nfe, Examples) {
  EXPECT_EQ(nfe({28, true, 1}), 56);
  EXPECT_EQ(nfe({4, false, 1}), 4);
  EXPECT_EQ(nfe({4, false, 3}), 12);
}

TEST(Nfe, LinearAndCfgDoubles) {
  for (int steps = 1; steps <= 50; ++steps) {
    for (int k = 1; k <= 8; ++k) {
      EXPECT_EQ(nfe({steps, false, k}), std::int64_t(steps) * k);
      EXPECT_EQ(nfe({steps, true, k}), 2 * nfe({steps, false, k}));
    }
  }
}

TEST(Speedup, Examples) {
  EXPECT_NEAR(speedup(287.0, 25.5), 11.25, 0.01);
  EXPECT_NEAR(speedup(192.4, 12.6), 15.27, 0.005);
  EXPECT_EQ(speedup(3.0, 3.0), 1.0);
  EXPECT_EQ(error_code([] { speedup(1.0, 0.0); }), "bad_time");
}

TEST(Histogram, CountsImages) {
  const std::vector<Trajectory> ts{make_trajectory("a", 1), make_trajectory("b", 2), make_trajectory("c", 2),
                                   make_trajectory("d", 5)};
  const auto h = histogram(ts);
  EXPECT_EQ(h, (IterationHistogram{{1, 1}, {2, 2}, {5, 1}}));
  std::size_t total = 0;
  for (const auto& [k, v] : h) total += v;
  EXPECT_EQ(total, ts.size());
  const std::vector<Trajectory> none{make_trajectory("z", 0)};
  EXPECT_EQ(error_code([&] { histogram(none); }), "no_images");
}

}  // namespace
