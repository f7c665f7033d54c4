// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clvr/error.hpp"

namespace clvr::stats {

namespace {

void check_binomial(double p_hat, std::int64_t n) {
  if (n < 1) throw Error("bad_n", "n must be at least 1");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw Error("bad_p", "p_hat must lie in [0, 1]");
}

}  // namespace

double z_for(double confidence) {
  struct Entry {
    double confidence, z;
  };
  static constexpr Entry table[] = {{0.90, 1.644854}, {0.95, 1.959964}, {0.99, 2.575829}};
  for (const auto& e : table) {
    if (std::abs(e.confidence - confidence) < 1e-9) return e.z;
  }
  throw Error("bad_confidence", "supported confidence levels are 0.90, 0.95 and 0.99");
}

double se_binomial(double p_hat, std::int64_t n) {
  check_binomial(p_hat, n);
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

Interval wilson_interval(double p_hat, std::int64_t n, double confidence) {
  check_binomial(p_hat, n);
  const double z = z_for(confidence);
  const auto nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p_hat + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
}

BinomialSummary summarize_binomial(double p_hat, std::int64_t n, double confidence) {
  const Interval ci = wilson_interval(p_hat, n, confidence);
  return {p_hat, n, se_binomial(p_hat, n), ci.low, ci.high, confidence};
}

double se_mean(std::span<const double> values) {
  if (values.size() < 2) throw Error("too_few_values", "standard error needs at least 2 values");
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

Interval normal_ci(double mean, double se, double confidence) {
  if (!(se >= 0.0)) throw Error("bad_se", "standard error must be nonnegative");
  const double z = z_for(confidence);
  return {mean - z * se, mean + z * se};
}

std::int64_t nfe(const NfeConfig& config) {
  if (config.steps < 1 || config.iterations < 1) throw Error("bad_config", "steps and iterations must be at least 1");
  return static_cast<std::int64_t>(config.iterations) * config.steps * (config.cfg ? 2 : 1);
}

double speedup(double base_seconds, double fast_seconds) {
  if (!(fast_seconds > 0.0)) throw Error("bad_time", "fast time must be positive");
  if (!(base_seconds >= 0.0)) throw Error("bad_time", "base time must be nonnegative");
  return base_seconds / fast_seconds;
}

IterationHistogram histogram(std::span<const Trajectory> trajectories) {
  IterationHistogram h;
  for (const auto& t : trajectories) {
    const std::size_t k = t.image_count();
    if (k == 0) throw Error("no_images", "trajectory '" + t.id + "' has no image iterations");
    ++h[k];
  }
  return h;
}

}  // namespace clvr::stats
