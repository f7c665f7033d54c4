// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// State-constrained closed-loop controller: the verification-gated data
// engine (generate -> inspect -> edit/refine -> validate -> finalize) and
// the plan/act inference loop, both driven through pluggable agent adapters.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clvr/rng.hpp"
#include "clvr/trajectory.hpp"

namespace clvr {

enum class ControllerState { GenerateBaseImage, Inspect, EditRefine, Validate, Finalize, Failed };

enum class ControllerEvent {
  GenOk,
  GenFail,
  NeedsEdit,
  InspectOk,
  EditOk,
  EditFail,
  ValidateOk,
  ValidatePartial,
  BudgetExhausted,
};

std::string_view to_string(ControllerState state);
std::string_view to_string(ControllerEvent event);

/// Transition function of the controller machine. Failed is absorbing;
/// Finalize accepts no events. Throws clvr::Error("illegal_transition").
ControllerState step_state(ControllerState state, ControllerEvent event);

/// Per-state attempt budget. An attempt is one tool/agent invocation made
/// while in a state; the counter restarts on every fresh entry into the
/// state, so the limit bounds retries within one visit. A limit of zero
/// forbids the state outright.
class RetryBudget {
 public:
  static constexpr int kDefaultLimit = 2;

  RetryBudget() : RetryBudget(kDefaultLimit) {}
  explicit RetryBudget(int uniform_limit);

  void set_limit(ControllerState state, int limit);
  int limit(ControllerState state) const;
  int used(ControllerState state) const;

  /// Starts a new visit of `state`.
  void enter(ControllerState state);
  /// Consumes one attempt; false when the visit's budget is spent.
  bool try_consume(ControllerState state);

  const std::map<ControllerState, int>& limits() const { return limit_; }

 private:
  std::map<ControllerState, int> limit_;
  std::map<ControllerState, int> used_;
};

struct Checklist {
  std::vector<std::string> items;
  std::vector<bool> satisfied;

  static Checklist of(std::vector<std::string> items);
  bool all_satisfied() const;
};

/// An image as seen by the controller. `satisfied`, `quality` and
/// `closed_loop` are simulator ground truth; real adapters leave them empty.
struct Canvas {
  ImageRef image;
  std::set<std::string> satisfied;
  double quality = 0.0;
  bool closed_loop = false;
  int revision = 0;
};

struct PlannerContext {
  std::string_view prompt;
  const std::vector<ReasoningStep>* steps = nullptr;
  const Canvas* canvas = nullptr;
  std::vector<std::string> gaps;
  std::uint64_t episode_seed = 0;
  int iteration = 0;
};

struct PlanDecision {
  std::string reasoning;
  Action action;
  std::optional<std::string> instruction;
  /// Atomic requirements the requested image must meet (step checklist).
  std::vector<std::string> checklist;
};

struct GenerationRequest {
  std::string_view prompt;
  std::string instruction;
  std::vector<std::string> targets;
  const Canvas* previous = nullptr;
  std::string image_id;
  ImageSource source = ImageSource::generated;
};

enum class Slot { A, B };
enum class Choice { candidate, baseline };

using Planner = std::function<PlanDecision(const PlannerContext&, std::uint64_t seed)>;
/// nullopt signals a recoverable tool failure (retried within budget);
/// throwing signals an adapter fault (FAIL(mid)).
using Generator = std::function<std::optional<Canvas>(const GenerationRequest&, std::uint64_t seed)>;
using BaselineGenerator = std::function<Canvas(std::string_view prompt, std::string image_id, std::uint64_t seed)>;
using PassiveVerifier = std::function<bool(const Canvas&, const Checklist&, std::uint64_t seed)>;
using ActiveVerifier =
    std::function<std::vector<std::string>(const Canvas&, std::string_view prompt, std::uint64_t seed)>;
/// Sees two unlabeled images and returns the preferred slot.
using Judge = std::function<Slot(const Canvas& a, const Canvas& b, std::uint64_t seed)>;

struct AgentAdapters {
  Planner planner;
  Generator generator;
  BaselineGenerator baseline;
  PassiveVerifier passive_verifier;
  ActiveVerifier active_verifier;
  std::array<Judge, 2> judges;
};

/// True iff the adapter reports every checklist item satisfied. Throws on an
/// empty checklist.
bool passive_verify(const Canvas& canvas, const Checklist& checklist, const PassiveVerifier& verifier,
                    std::uint64_t seed);

/// Gap list; empty means the canvas is aligned with the prompt.
std::vector<std::string> active_verify(const Canvas& canvas, std::string_view prompt,
                                       const ActiveVerifier& verifier, std::uint64_t seed);

/// Randomizes presentation order, asks the judge, and maps the chosen slot
/// back to the underlying item.
Choice blind_ab(const Canvas& candidate, const Canvas& baseline, const Judge& judge, CounterRng& rng);

struct ConsensusResult {
  bool retain = false;
  std::array<bool, 2> verdicts{};
};

/// Logical AND of both judges' "candidate superior" verdicts under blind A/B.
ConsensusResult consensus_filter(const Canvas& candidate, const Canvas& baseline,
                                 const std::array<Judge, 2>& judges, CounterRng& rng);
/// Pure form over two already-available judgments.
bool consensus_filter(std::optional<bool> judge1, std::optional<bool> judge2);

enum class DiscardReason { passive_failure, budget, consensus_reject, format_violation, fail_mid };
std::string_view to_string(DiscardReason reason);

enum class ActiveFrequency { on_validate, every_image };

struct EpisodeConfig {
  RetryBudget budget;
  int max_iterations = kDefaultMaxIterations;
  ActiveFrequency active_frequency = ActiveFrequency::on_validate;
};

struct EpisodeLog {
  std::vector<ControllerState> states;
  /// Highest per-visit attempt count observed for each state.
  std::map<ControllerState, int> peak_used;
  std::map<ControllerState, int> limits;
  std::optional<DiscardReason> discard;
  std::string detail;
  int iterations = 0;
};

struct EpisodeResult {
  std::optional<Trajectory> trajectory;
  std::optional<Canvas> final_canvas;
  EpisodeLog log;
};

/// Runs one verification-gated episode. Any passive failure discards the
/// whole context; adapter exceptions end the episode as fail_mid.
EpisodeResult run_episode(std::string_view prompt, const AgentAdapters& adapters,
                          const EpisodeConfig& config, CounterRng& rng,
                          const std::string& trajectory_id = "traj");
EpisodeResult run_episode(std::string_view prompt, const AgentAdapters& adapters,
                          const EpisodeConfig& config, std::uint64_t master_seed,
                          std::uint64_t item_index = 0);

struct SynthesisStats {
  std::uint64_t attempted = 0;
  std::uint64_t retained = 0;
  double retention_rate = 0.0;
  std::map<std::string, std::uint64_t> discard_reasons;
  std::map<int, std::uint64_t> iteration_histogram;
};

struct SynthesisOptions {
  EpisodeConfig episode;
  unsigned threads = 1;
};

struct SynthesisResult {
  std::vector<Trajectory> trajectories;
  SynthesisStats stats;
  std::vector<EpisodeLog> logs;  // one per prompt, in prompt order
};

/// Item i draws every random number from stream (master_seed, i), so the
/// output is independent of `threads`.
SynthesisResult synthesize_dataset(const std::vector<std::string>& prompts, const AgentAdapters& adapters,
                                   const SynthesisOptions& options, std::uint64_t master_seed);

struct InferenceResult {
  std::optional<ImageRef> final_image;
  std::optional<Canvas> final_canvas;
  Trajectory trajectory;
  int iterations = 0;
  bool forced_stop = false;
};

/// Plan/act loop: image_gen dispatches generation, terminate returns the
/// current canvas, and the loop is cut at `max_iterations` images.
InferenceResult run_inference(std::string_view prompt, const AgentAdapters& adapters,
                              int max_iterations = kDefaultMaxIterations, std::uint64_t seed = 0);

}  // namespace clvr
