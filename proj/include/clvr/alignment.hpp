// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// RL-ready item preparation: proxy-prompt extraction from a truncated
// multimodal context, the two-branch proxy reward, and the T2I/I2I task-mix
// sampler. No optimization happens here.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clvr/rng.hpp"
#include "clvr/trajectory.hpp"

namespace clvr::align {

struct ProxyPrompts {
  std::string p_t2i;
  std::optional<std::string> p_i2i;
  /// Indices into the context's image list; present iff t > 0.
  std::optional<std::vector<std::size_t>> i_ref;

  bool operator==(const ProxyPrompts&) const = default;
};

/// The foundation-VLM extractor: context in, proxy triple out.
using Extractor = std::function<ProxyPrompts(const std::vector<ContextItem>& context)>;

/// Concatenated reasoning as p_t2i; for t > 0 the last reasoning as p_i2i
/// and the most recent image as the sole reference.
Extractor simulated_extractor();

/// Runs the extractor and enforces the branch contract: t = 0 yields only
/// p_t2i, t > 0 the full triple with every index inside C_img. Throws
/// clvr::Error("bad_proxy") otherwise.
ProxyPrompts extract_proxy(const std::vector<ContextItem>& context, const Extractor& extractor);

struct RewardInputs {
  int t = 0;
  double r_t2i = 0.0;
  std::optional<double> r_i2i;
};

struct RewardWeights {
  double t2i = 0.5;
  double i2i = 0.5;
};

/// R_T2I at t = 0, otherwise the weighted blend of R_T2I and R_I2I. Inputs
/// must lie in [0,1]; t > 0 requires r_i2i.
double proxy_reward(const RewardInputs& inputs, const RewardWeights& weights = {});

/// Token-overlap reward model used in simulation: fraction of the
/// requirement strings whose tokens all appear in the proxy prompt.
double simulated_reward(const std::string& proxy_prompt, const std::vector<std::string>& satisfied);

struct TaskMixWeights {
  double t2i = 1.0;
  double i2i = 1.0;
  /// Step buckets {1, 2, 3, >=4}.
  std::array<double, 4> i2i_buckets{1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

struct TaskKind {
  bool i2i = false;
  int bucket = 0;  // 1..4 for I2I, 0 for T2I

  bool operator==(const TaskKind&) const = default;
};

TaskKind sample_task(CounterRng& rng, const TaskMixWeights& weights);

struct RlItem {
  std::string trajectory_id;
  TaskKind task;
  TruncatedSample sample;
  ProxyPrompts proxy;
};

struct BatchOptions {
  std::size_t size = 16;
  int max_resamples = 16;
};

/// Item k uses stream (seed, k): task draw, then a uniform pick among the
/// (trajectory, t) pairs that fit the task. A draw with no fitting pair is
/// resampled up to max_resamples times before failing with
/// clvr::Error("no_match").
std::vector<RlItem> build_rl_batch(const std::vector<Trajectory>& trajectories, std::uint64_t seed,
                                   const TaskMixWeights& weights, const Extractor& extractor,
                                   const BatchOptions& options = {});

/// Recorded training configuration; nothing here is executed.
struct RlConfig {
  double learning_rate = 1e-4;
  double kl_beta = 1e-5;
  int lora_rank = 128;
  double lora_alpha = 256.0;
  int group_size = 16;
  double cfg_scale = 4.0;
  int rollout_steps = 8;
  int resolution = 512;

  void validate() const;
};

std::string rl_config_to_json(const RlConfig& config);
std::string rl_item_to_json(const RlItem& item);

}  // namespace clvr::align
