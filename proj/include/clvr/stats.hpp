// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "clvr/trajectory.hpp"

namespace clvr::stats {

/// Two-sided normal quantile for 0.90, 0.95 and 0.99.
double z_for(double confidence);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// sqrt(p (1 - p) / n).
double se_binomial(double p_hat, std::int64_t n);

/// Wilson score interval, clipped to [0, 1].
Interval wilson_interval(double p_hat, std::int64_t n, double confidence = 0.95);

struct BinomialSummary {
  double p_hat = 0.0;
  std::int64_t n = 0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.95;
};

BinomialSummary summarize_binomial(double p_hat, std::int64_t n, double confidence = 0.95);

/// Sample standard deviation (n - 1 denominator) over sqrt(n).
double se_mean(std::span<const double> values);
Interval normal_ci(double mean, double se, double confidence = 0.95);

struct NfeConfig {
  int steps = 28;
  bool cfg = true;
  int iterations = 1;
};

/// iterations * steps * (cfg ? 2 : 1).
std::int64_t nfe(const NfeConfig& config);

double speedup(double base_seconds, double fast_seconds);

/// Image count -> number of trajectories with that many images.
using IterationHistogram = std::map<std::size_t, std::size_t>;

IterationHistogram histogram(std::span<const Trajectory> trajectories);

}  // namespace clvr::stats
