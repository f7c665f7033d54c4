// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic stand-ins for the planner, diffusion agent, verifiers and
// judges. A prompt's requirements are its ';'-separated clauses; every
// simulated image carries the set of requirements it actually satisfies.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clvr/controller.hpp"

namespace clvr::sim {

struct SimEnvConfig {
  /// Probability that a targeted requirement is rendered correctly.
  double per_item_success_prob = 0.8;
  /// The planner splits the requirements into a plan of uniformly drawn
  /// length in [plan_min, plan_max] and targets one chunk per image.
  int plan_min = 1;
  int plan_max = 4;
  /// Probability that each judge prefers the better of two images.
  double judge_agreement_prob = 0.7;
  /// Probability that a generation call fails recoverably (GenFail/EditFail).
  double tool_fault_prob = 0.0;
  /// Probability that an edit breaks a previously satisfied requirement.
  double regression_prob = 0.0;
  /// Per-requirement success of the one-shot baseline; negative means
  /// "same as per_item_success_prob".
  double baseline_item_prob = -1.0;
  std::uint64_t master_seed = 0;

  /// Throws clvr::Error when a probability leaves [0,1] or the plan range is empty.
  void validate() const;
};

/// Requirement list of a prompt: trimmed, non-empty ';' clauses.
std::vector<std::string> requirements_of(std::string_view prompt);

AgentAdapters make_adapters(const SimEnvConfig& config);

/// Plan length the simulated planner uses for a given episode seed.
int plan_length(const SimEnvConfig& config, std::uint64_t episode_seed);

/// Judge that always answers the given slot, for order-bias tests.
Judge fixed_slot_judge(Slot slot);

}  // namespace clvr::sim
