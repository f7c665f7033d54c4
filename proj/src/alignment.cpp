// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/alignment.hpp"

#include <cctype>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "clvr/error.hpp"
#include "clvr/trajectory_json.hpp"

namespace clvr::align {

namespace {

std::size_t count_images(const std::vector<ContextItem>& context) {
  return static_cast<std::size_t>(std::count_if(context.begin(), context.end(), [](const ContextItem& c) {
    return c.kind == ContextItem::Kind::image;
  }));
}

std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

Extractor simulated_extractor() {
  return [](const std::vector<ContextItem>& context) {
    ProxyPrompts p;
    std::string last;
    for (const auto& item : context) {
      if (item.kind != ContextItem::Kind::reasoning) continue;
      if (!p.p_t2i.empty()) p.p_t2i += ' ';
      p.p_t2i += item.text;
      last = item.text;
    }
    const std::size_t images = count_images(context);
    if (images > 0) {
      p.p_i2i = last;
      p.i_ref = std::vector<std::size_t>{images - 1};
    }
    return p;
  };
}

ProxyPrompts extract_proxy(const std::vector<ContextItem>& context, const Extractor& extractor) {
  if (context.empty() || context.front().kind != ContextItem::Kind::prompt ||
      context.back().kind != ContextItem::Kind::reasoning) {
    throw Error("bad_context", "context must start with the prompt and end with reasoning text");
  }
  const std::size_t images = count_images(context);
  ProxyPrompts p = extractor(context);
  if (images == 0) {
    if (p.p_i2i || p.i_ref) throw Error("bad_proxy", "t = 0 context admits only p_t2i");
    return p;
  }
  if (!p.p_i2i || !p.i_ref || p.i_ref->empty()) {
    throw Error("bad_proxy", "t > 0 context requires p_i2i and a non-empty i_ref");
  }
  for (std::size_t idx : *p.i_ref) {
    if (idx >= images) {
      throw Error("bad_proxy", "i_ref index " + std::to_string(idx) + " outside C_img of size " +
                                   std::to_string(images));
    }
  }
  return p;
}

double proxy_reward(const RewardInputs& in, const RewardWeights& w) {
  auto in_range = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (in.t < 0) throw Error("bad_reward", "t must be nonnegative");
  if (!in_range(in.r_t2i)) throw Error("bad_reward", "r_t2i must lie in [0,1]");
  if (in.t == 0) return in.r_t2i;
  if (!in.r_i2i) throw Error("bad_reward", "t > 0 requires r_i2i");
  if (!in_range(*in.r_i2i)) throw Error("bad_reward", "r_i2i must lie in [0,1]");
  return w.t2i * in.r_t2i + w.i2i * *in.r_i2i;
}

double simulated_reward(const std::string& proxy_prompt, const std::vector<std::string>& satisfied) {
  if (satisfied.empty()) return 0.0;
  const auto vocab_list = tokens(proxy_prompt);
  const std::unordered_set<std::string> vocab(vocab_list.begin(), vocab_list.end());
  std::size_t hits = 0;
  for (const auto& req : satisfied) {
    const auto toks = tokens(req);
    if (!toks.empty() && std::all_of(toks.begin(), toks.end(), [&](const auto& t) { return vocab.count(t) > 0; })) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(satisfied.size());
}

void TaskMixWeights::validate() const {
  auto ok = [](double w) { return std::isfinite(w) && w >= 0.0; };
  if (!ok(t2i) || !ok(i2i) || t2i + i2i <= 0.0) {
    throw Error("bad_weights", "task weights must be nonnegative with a positive sum");
  }
  double sum = 0.0;
  for (double b : i2i_buckets) {
    if (!ok(b)) throw Error("bad_weights", "bucket weights must be nonnegative");
    sum += b;
  }
  if (i2i > 0.0 && sum <= 0.0) throw Error("bad_weights", "I2I buckets need a positive weight");
}

TaskKind sample_task(CounterRng& rng, const TaskMixWeights& w) {
  w.validate();
  TaskKind kind;
  if (rng.uniform() * (w.t2i + w.i2i) < w.t2i) return kind;
  kind.i2i = true;
  const double total = w.i2i_buckets[0] + w.i2i_buckets[1] + w.i2i_buckets[2] + w.i2i_buckets[3];
  const double u = rng.uniform() * total;
  double acc = 0.0;
  kind.bucket = 4;
  for (int b = 0; b < 4; ++b) {
    acc += w.i2i_buckets[static_cast<std::size_t>(b)];
    if (u < acc) {
      kind.bucket = b + 1;
      break;
    }
  }
  return kind;
}

std::vector<RlItem> build_rl_batch(const std::vector<Trajectory>& trajectories, std::uint64_t seed,
                                   const TaskMixWeights& weights, const Extractor& extractor,
                                   const BatchOptions& options) {
  weights.validate();
  // Image-bearing step indices, ordered: position 0 is the T2I sample, later
  // positions are I2I samples at that image count.
  struct Candidate {
    std::size_t traj;
    int step_index;
  };
  std::array<std::vector<Candidate>, 5> pools;  // 0: T2I, 1..4: I2I buckets
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto report = validate_trajectory(trajectories[i]);
    if (!report.ok()) {
      throw Error("invalid_trajectory", "trajectory '" + trajectories[i].id + "': " +
                                            report.violations.front().message);
    }
    int n = 0;
    for (const auto& s : trajectories[i].steps) {
      if (!s.image) continue;
      pools[static_cast<std::size_t>(std::min(n, 4))].push_back({i, s.index});
      ++n;
    }
  }

  std::vector<RlItem> batch;
  batch.reserve(options.size);
  for (std::size_t k = 0; k < options.size; ++k) {
    CounterRng rng(seed, k);
    bool placed = false;
    for (int attempt = 0; attempt <= options.max_resamples && !placed; ++attempt) {
      const TaskKind task = sample_task(rng, weights);
      const auto& pool = pools[static_cast<std::size_t>(task.i2i ? task.bucket : 0)];
      if (pool.empty()) continue;
      const Candidate& c = pool[rng.below(pool.size())];
      const Trajectory& traj = trajectories[c.traj];
      RlItem item;
      item.trajectory_id = traj.id;
      item.task = task;
      item.sample = truncate_at(traj, c.step_index);
      item.proxy = extract_proxy(item.sample.context, extractor);
      batch.push_back(std::move(item));
      placed = true;
    }
    if (!placed) {
      throw Error("no_match", "item " + std::to_string(k) + ": no trajectory fits the drawn task after " +
                                  std::to_string(options.max_resamples) + " resamples");
    }
  }
  return batch;
}

void RlConfig::validate() const {
  if (lora_rank < 1) throw Error("bad_config", "lora_rank must be at least 1");
  if (!(lora_alpha > 0.0)) throw Error("bad_config", "lora_alpha must be positive");
}

std::string rl_config_to_json(const RlConfig& c) {
  json::Json j;
  j["learning_rate"] = c.learning_rate;
  j["kl_beta"] = c.kl_beta;
  j["lora_rank"] = c.lora_rank;
  j["lora_alpha"] = c.lora_alpha;
  j["group_size"] = c.group_size;
  j["cfg_scale"] = c.cfg_scale;
  j["rollout_steps"] = c.rollout_steps;
  j["resolution"] = c.resolution;
  return j.dump();
}

std::string rl_item_to_json(const RlItem& item) {
  json::Json j;
  j["trajectory_id"] = item.trajectory_id;
  j["task"] = item.task.i2i ? "i2i" : "t2i";
  if (item.task.i2i) j["bucket"] = item.task.bucket;
  j["t"] = item.sample.t;
  j["context"] = json::context_to_json(item.sample.context);
  j["target"] = json::image_to_json(item.sample.target);
  json::Json proxy;
  proxy["p_t2i"] = item.proxy.p_t2i;
  if (item.proxy.p_i2i) proxy["p_i2i"] = *item.proxy.p_i2i;
  if (item.proxy.i_ref) proxy["i_ref"] = *item.proxy.i_ref;
  j["proxy"] = proxy;
  return j.dump();
}

}  // namespace clvr::align
