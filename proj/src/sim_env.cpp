// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/sim_env.hpp"

#include <algorithm>
#include <tuple>

#include "clvr/error.hpp"

namespace clvr::sim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

double quality_of(const std::set<std::string>& satisfied, const std::vector<std::string>& items) {
  if (items.empty()) return 1.0;
  const auto hits = std::count_if(items.begin(), items.end(),
                                  [&](const std::string& it) { return satisfied.count(it) > 0; });
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

}  // namespace

void SimEnvConfig::validate() const {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("bad_config", std::string(name) + " must lie in [0,1]");
  };
  check(per_item_success_prob, "per_item_success_prob");
  check(judge_agreement_prob, "judge_agreement_prob");
  check(tool_fault_prob, "tool_fault_prob");
  check(regression_prob, "regression_prob");
  if (baseline_item_prob >= 0.0) check(baseline_item_prob, "baseline_item_prob");
  if (plan_min < 1 || plan_max < plan_min) throw Error("bad_config", "need 1 <= plan_min <= plan_max");
}

std::vector<std::string> requirements_of(std::string_view prompt) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= prompt.size()) {
    auto end = prompt.find(';', pos);
    if (end == std::string_view::npos) end = prompt.size();
    std::string item = trim(prompt.substr(pos, end - pos));
    if (!item.empty() && std::find(items.begin(), items.end(), item) == items.end()) {
      items.push_back(std::move(item));
    }
    pos = end + 1;
  }
  return items;
}

int plan_length(const SimEnvConfig& config, std::uint64_t episode_seed) {
  CounterRng rng(config.master_seed ^ episode_seed, 0x706c616e);
  return static_cast<int>(rng.between(config.plan_min, config.plan_max));
}

Judge fixed_slot_judge(Slot slot) {
  return [slot](const Canvas&, const Canvas&, std::uint64_t) { return slot; };
}

AgentAdapters make_adapters(const SimEnvConfig& config) {
  config.validate();
  const double baseline_prob =
      config.baseline_item_prob >= 0.0 ? config.baseline_item_prob : config.per_item_success_prob;

  AgentAdapters a;

  a.planner = [config](const PlannerContext& ctx, std::uint64_t) {
    const auto items = requirements_of(ctx.prompt);
    std::vector<std::string> unmet;
    for (const auto& it : items) {
      if (!ctx.canvas || ctx.canvas->satisfied.count(it) == 0) unmet.push_back(it);
    }
    PlanDecision d;
    if (unmet.empty()) {
      d.reasoning = "The canvas satisfies every requirement; finishing.";
      d.action = Action::terminate();
      return d;
    }
    const auto length = static_cast<std::size_t>(plan_length(config, ctx.episode_seed));
    const std::size_t chunk = (items.size() + length - 1) / length;
    d.checklist.assign(unmet.begin(), unmet.begin() + static_cast<std::ptrdiff_t>(std::min(chunk, unmet.size())));
    const std::string targets = join(d.checklist, ", ");
    d.reasoning = ctx.canvas ? "Refine the canvas to add: " + targets : "Compose a base image with: " + targets;
    d.instruction = targets;
    d.action = Action::image_gen();
    return d;
  };

  a.generator = [config](const GenerationRequest& req, std::uint64_t seed) -> std::optional<Canvas> {
    CounterRng rng(seed, 0x67656e);
    if (rng.bernoulli(config.tool_fault_prob)) return std::nullopt;
    Canvas c;
    c.image = ImageRef::simulated(req.image_id, req.source);
    c.closed_loop = true;
    c.revision = req.previous ? req.previous->revision + 1 : 1;
    if (req.previous) {
      for (const auto& it : req.previous->satisfied) {
        const bool targeted = std::find(req.targets.begin(), req.targets.end(), it) != req.targets.end();
        if (targeted) continue;
        if (!rng.bernoulli(config.regression_prob)) c.satisfied.insert(it);
      }
    }
    for (const auto& t : req.targets) {
      if (rng.bernoulli(config.per_item_success_prob)) c.satisfied.insert(t);
    }
    c.quality = quality_of(c.satisfied, requirements_of(req.prompt));
    return c;
  };

  a.baseline = [baseline_prob](std::string_view prompt, std::string image_id, std::uint64_t seed) {
    CounterRng rng(seed, 0x62617365);
    Canvas c;
    c.image = ImageRef::simulated(std::move(image_id), ImageSource::generated);
    c.revision = 1;
    const auto items = requirements_of(prompt);
    for (const auto& it : items) {
      if (rng.bernoulli(baseline_prob)) c.satisfied.insert(it);
    }
    c.quality = quality_of(c.satisfied, items);
    return c;
  };

  a.passive_verifier = [](const Canvas& canvas, const Checklist& checklist, std::uint64_t) {
    return std::all_of(checklist.items.begin(), checklist.items.end(),
                       [&](const std::string& it) { return canvas.satisfied.count(it) > 0; });
  };

  a.active_verifier = [](const Canvas& canvas, std::string_view prompt, std::uint64_t) {
    std::vector<std::string> gaps;
    for (const auto& it : requirements_of(prompt)) {
      if (canvas.satisfied.count(it) == 0) gaps.push_back(it);
    }
    return gaps;
  };

  // Content-keyed judge: ranks by (quality, produced in the verified loop,
  // revision) and prefers the better image with the agreement probability.
  const double agree = config.judge_agreement_prob;
  auto judge = [agree](std::uint64_t salt) -> Judge {
    return [agree, salt](const Canvas& a_img, const Canvas& b_img, std::uint64_t seed) {
      const auto key = [](const Canvas& c) { return std::make_tuple(c.quality, c.closed_loop, c.revision); };
      const Slot better = key(b_img) > key(a_img) ? Slot::B : Slot::A;
      const Slot worse = better == Slot::A ? Slot::B : Slot::A;
      return seed_uniform(seed ^ salt) < agree ? better : worse;
    };
  };
  a.judges = {judge(0x6a756467653100ULL), judge(0x6a756467653200ULL)};
  return a;
}

}  // namespace clvr::sim
