// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/controller.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "clvr/error.hpp"

namespace clvr {

namespace {

constexpr std::array kWorkingStates = {ControllerState::GenerateBaseImage, ControllerState::Inspect,
                                       ControllerState::EditRefine, ControllerState::Validate,
                                       ControllerState::Finalize};

}  // namespace

std::string_view to_string(ControllerState state) {
  switch (state) {
    case ControllerState::GenerateBaseImage: return "generate_base_image";
    case ControllerState::Inspect: return "inspect";
    case ControllerState::EditRefine: return "edit_refine";
    case ControllerState::Validate: return "validate";
    case ControllerState::Finalize: return "finalize";
    case ControllerState::Failed: return "failed";
  }
  return "?";
}

std::string_view to_string(ControllerEvent event) {
  switch (event) {
    case ControllerEvent::GenOk: return "GenOk";
    case ControllerEvent::GenFail: return "GenFail";
    case ControllerEvent::NeedsEdit: return "NeedsEdit";
    case ControllerEvent::InspectOk: return "InspectOk";
    case ControllerEvent::EditOk: return "EditOk";
    case ControllerEvent::EditFail: return "EditFail";
    case ControllerEvent::ValidateOk: return "ValidateOk";
    case ControllerEvent::ValidatePartial: return "ValidatePartial";
    case ControllerEvent::BudgetExhausted: return "BudgetExhausted";
  }
  return "?";
}

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::passive_failure: return "passive_failure";
    case DiscardReason::budget: return "budget";
    case DiscardReason::consensus_reject: return "consensus_reject";
    case DiscardReason::format_violation: return "format_violation";
    case DiscardReason::fail_mid: return "fail_mid";
  }
  return "?";
}

ControllerState step_state(ControllerState state, ControllerEvent event) {
  using S = ControllerState;
  using E = ControllerEvent;
  if (state == S::Failed) return S::Failed;
  if (state != S::Finalize && event == E::BudgetExhausted) return S::Failed;
  switch (state) {
    case S::GenerateBaseImage:
      if (event == E::GenOk) return S::Inspect;
      if (event == E::GenFail) return S::GenerateBaseImage;
      break;
    case S::Inspect:
      if (event == E::NeedsEdit) return S::EditRefine;
      if (event == E::InspectOk) return S::Validate;
      break;
    case S::EditRefine:
      if (event == E::EditOk) return S::Validate;
      if (event == E::EditFail) return S::EditRefine;
      break;
    case S::Validate:
      if (event == E::ValidateOk) return S::Finalize;
      if (event == E::ValidatePartial) return S::EditRefine;
      break;
    case S::Finalize:
    case S::Failed:
      break;
  }
  throw Error("illegal_transition", "illegal transition (" + std::string(to_string(state)) + ", " +
                                        std::string(to_string(event)) + ")");
}

RetryBudget::RetryBudget(int uniform_limit) {
  for (auto s : kWorkingStates) {
    limit_[s] = std::max(0, uniform_limit);
    used_[s] = 0;
  }
}

void RetryBudget::set_limit(ControllerState state, int limit) {
  if (limit < 0) throw Error("bad_budget", "budget limits must be nonnegative");
  limit_[state] = limit;
}

int RetryBudget::limit(ControllerState state) const {
  auto it = limit_.find(state);
  return it == limit_.end() ? 0 : it->second;
}

int RetryBudget::used(ControllerState state) const {
  auto it = used_.find(state);
  return it == used_.end() ? 0 : it->second;
}

void RetryBudget::enter(ControllerState state) { used_[state] = 0; }

bool RetryBudget::try_consume(ControllerState state) {
  int& u = used_[state];
  if (u >= limit(state)) return false;
  ++u;
  return true;
}

Checklist Checklist::of(std::vector<std::string> items) {
  Checklist c;
  c.satisfied.assign(items.size(), false);
  c.items = std::move(items);
  return c;
}

bool Checklist::all_satisfied() const {
  return std::all_of(satisfied.begin(), satisfied.end(), [](bool b) { return b; });
}

bool passive_verify(const Canvas& canvas, const Checklist& checklist, const PassiveVerifier& verifier,
                    std::uint64_t seed) {
  if (checklist.items.empty()) throw Error("empty_checklist", "passive verification needs a checklist");
  return verifier(canvas, checklist, seed);
}

std::vector<std::string> active_verify(const Canvas& canvas, std::string_view prompt,
                                       const ActiveVerifier& verifier, std::uint64_t seed) {
  return verifier(canvas, prompt, seed);
}

Choice blind_ab(const Canvas& candidate, const Canvas& baseline, const Judge& judge, CounterRng& rng) {
  if (candidate.image.id == baseline.image.id) {
    throw Error("same_item", "blind A/B needs two distinct images");
  }
  const bool swapped = (rng() & 1U) != 0;
  const std::uint64_t judge_seed = rng();
  const Canvas& a = swapped ? baseline : candidate;
  const Canvas& b = swapped ? candidate : baseline;
  const Slot slot = judge(a, b, judge_seed);
  const bool picked_candidate = (slot == Slot::A) != swapped;
  return picked_candidate ? Choice::candidate : Choice::baseline;
}

bool consensus_filter(std::optional<bool> judge1, std::optional<bool> judge2) {
  if (!judge1 || !judge2) throw Error("missing_judgment", "consensus needs both judgments");
  return *judge1 && *judge2;
}

ConsensusResult consensus_filter(const Canvas& candidate, const Canvas& baseline,
                                 const std::array<Judge, 2>& judges, CounterRng& rng) {
  if (!judges[0] || !judges[1]) throw Error("missing_judgment", "consensus needs two judges");
  ConsensusResult result;
  for (std::size_t j = 0; j < 2; ++j) {
    result.verdicts[j] = blind_ab(candidate, baseline, judges[j], rng) == Choice::candidate;
  }
  result.retain = consensus_filter(result.verdicts[0], result.verdicts[1]);
  return result;
}

// --- episode ------------------------------------------------------------------

namespace {

class Episode {
 public:
  Episode(std::string_view prompt, const AgentAdapters& adapters, const EpisodeConfig& config,
          CounterRng& rng, const std::string& id)
      : prompt_(prompt), adapters_(adapters), config_(config), rng_(rng), budget_(config.budget) {
    traj_.id = id;
    traj_.prompt = std::string(prompt);
    episode_seed_ = rng_();
    for (auto s : kWorkingStates) {
      log_.peak_used[s] = 0;
      log_.limits[s] = budget_.limit(s);
    }
  }

  EpisodeResult run() {
    try {
      loop();
    } catch (const std::exception& e) {
      discard(DiscardReason::fail_mid, std::string("FAIL(mid): ") + e.what());
    }
    EpisodeResult result;
    result.log = std::move(log_);
    result.log.iterations = iterations_;
    if (!result.log.discard) {
      result.trajectory = std::move(traj_);
      result.final_canvas = std::move(canvas_);
    }
    return result;
  }

 private:
  void loop() {
    enter(ControllerState::GenerateBaseImage);
    while (state_ != ControllerState::Failed && !done_) {
      log_.states.push_back(state_);
      if (!budget_.try_consume(state_)) {
        fail(DiscardReason::budget,
             "retry budget exhausted in " + std::string(to_string(state_)));
        continue;
      }
      log_.peak_used[state_] = std::max(log_.peak_used[state_], budget_.used(state_));
      switch (state_) {
        case ControllerState::GenerateBaseImage:
        case ControllerState::EditRefine: generate(); break;
        case ControllerState::Inspect: inspect(); break;
        case ControllerState::Validate: validate(); break;
        case ControllerState::Finalize: finalize(); break;
        case ControllerState::Failed: break;
      }
    }
  }

  void enter(ControllerState s) {
    state_ = s;
    budget_.enter(s);
  }

  void fire(ControllerEvent event) {
    const ControllerState next = step_state(state_, event);
    if (next == state_) {
      return;  // retry in place, same visit
    }
    enter(next);
  }

  void fail(DiscardReason reason, std::string detail) {
    discard(reason, std::move(detail));
    state_ = step_state(state_, ControllerEvent::BudgetExhausted);
  }

  void discard(DiscardReason reason, std::string detail) {
    if (!log_.discard) {
      log_.discard = reason;
      log_.detail = std::move(detail);
    }
    state_ = ControllerState::Failed;
  }

  PlannerContext context() const {
    PlannerContext ctx;
    ctx.prompt = prompt_;
    ctx.steps = &traj_.steps;
    ctx.canvas = canvas_ ? &*canvas_ : nullptr;
    ctx.gaps = gaps_;
    ctx.episode_seed = episode_seed_;
    ctx.iteration = iterations_;
    return ctx;
  }

  void generate() {
    const bool base = state_ == ControllerState::GenerateBaseImage;
    if (iterations_ >= config_.max_iterations) {
      fail(DiscardReason::budget, "iteration cap of " + std::to_string(config_.max_iterations) + " reached");
      return;
    }
    PlanDecision decision = pending_ ? std::move(*pending_) : adapters_.planner(context(), rng_());
    pending_.reset();
    if (decision.action.kind != ActionKind::image_gen || decision.action.token != kImageGenToken ||
        decision.checklist.empty()) {
      discard(DiscardReason::format_violation, "planner did not emit a well-formed image_gen action");
      return;
    }

    GenerationRequest request;
    request.prompt = prompt_;
    request.instruction = decision.instruction.value_or(decision.reasoning);
    request.targets = decision.checklist;
    request.previous = canvas_ ? &*canvas_ : nullptr;
    request.image_id = traj_.id + "/img-" + std::to_string(iterations_);
    request.source = base ? ImageSource::generated : ImageSource::edited;
    std::optional<Canvas> produced = adapters_.generator(request, rng_());
    if (!produced) {
      pending_ = std::move(decision);
      fire(base ? ControllerEvent::GenFail : ControllerEvent::EditFail);
      return;
    }
    ++iterations_;

    const Checklist checklist = Checklist::of(decision.checklist);
    const bool pass = passive_verify(*produced, checklist, adapters_.passive_verifier, rng_());
    if (!pass) {
      discard(DiscardReason::passive_failure,
              "passive verification failed at iteration " + std::to_string(iterations_));
      return;
    }

    ReasoningStep step;
    step.index = static_cast<int>(traj_.steps.size());
    step.reasoning = std::move(decision.reasoning);
    step.action = Action::image_gen();
    step.image = produced->image;
    step.passive_pass = true;
    canvas_ = std::move(produced);
    if (config_.active_frequency == ActiveFrequency::every_image) {
      step.active_gaps = active_verify(*canvas_, prompt_, adapters_.active_verifier, rng_());
    }
    traj_.steps.push_back(std::move(step));
    gaps_.clear();
    fire(base ? ControllerEvent::GenOk : ControllerEvent::EditOk);
  }

  void inspect() {
    PlanDecision decision = adapters_.planner(context(), rng_());
    if (decision.action.kind == ActionKind::image_gen) {
      pending_ = std::move(decision);
      fire(ControllerEvent::NeedsEdit);
    } else if (decision.action.kind == ActionKind::terminate) {
      pending_ = std::move(decision);
      fire(ControllerEvent::InspectOk);
    } else {
      discard(DiscardReason::format_violation, "inspect expects image_gen or terminate");
    }
  }

  void validate() {
    gaps_ = active_verify(*canvas_, prompt_, adapters_.active_verifier, rng_());
    for (auto it = traj_.steps.rbegin(); it != traj_.steps.rend(); ++it) {
      if (it->image) {
        it->active_gaps = gaps_;
        break;
      }
    }
    if (gaps_.empty()) {
      fire(ControllerEvent::ValidateOk);
    } else {
      pending_.reset();
      fire(ControllerEvent::ValidatePartial);
    }
  }

  void finalize() {
    PlanDecision decision;
    if (pending_ && pending_->action.kind == ActionKind::terminate) {
      decision = std::move(*pending_);
    } else {
      decision = adapters_.planner(context(), rng_());
    }
    pending_.reset();
    if (decision.action.kind != ActionKind::terminate || decision.action.token != kTerminateToken) {
      discard(DiscardReason::format_violation, "finalize expects a terminate action");
      return;
    }
    ReasoningStep step;
    step.index = static_cast<int>(traj_.steps.size());
    step.reasoning = std::move(decision.reasoning);
    step.action = Action::terminate();
    traj_.steps.push_back(std::move(step));
    traj_.terminated = true;
    traj_.meta["iterations"] = std::to_string(iterations_);

    ValidationOptions options;
    options.max_iterations = config_.max_iterations;
    options.require_passive_pass = true;
    const auto report = validate_trajectory(traj_, options);
    if (!report.ok()) {
      discard(DiscardReason::format_violation, report.violations.front().message);
      return;
    }
    done_ = true;
  }

  std::string_view prompt_;
  const AgentAdapters& adapters_;
  const EpisodeConfig& config_;
  CounterRng& rng_;
  RetryBudget budget_;
  std::uint64_t episode_seed_ = 0;

  ControllerState state_ = ControllerState::GenerateBaseImage;
  bool done_ = false;
  int iterations_ = 0;
  Trajectory traj_;
  std::optional<Canvas> canvas_;
  std::optional<PlanDecision> pending_;
  std::vector<std::string> gaps_;
  EpisodeLog log_;
};

std::string trajectory_id_for(std::uint64_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "traj-" + digits;
}

}  // namespace

EpisodeResult run_episode(std::string_view prompt, const AgentAdapters& adapters,
                          const EpisodeConfig& config, CounterRng& rng, const std::string& trajectory_id) {
  return Episode(prompt, adapters, config, rng, trajectory_id).run();
}

EpisodeResult run_episode(std::string_view prompt, const AgentAdapters& adapters,
                          const EpisodeConfig& config, std::uint64_t master_seed, std::uint64_t item_index) {
  CounterRng rng(master_seed, item_index);
  return run_episode(prompt, adapters, config, rng, trajectory_id_for(item_index));
}

SynthesisResult synthesize_dataset(const std::vector<std::string>& prompts, const AgentAdapters& adapters,
                                   const SynthesisOptions& options, std::uint64_t master_seed) {
  if (prompts.empty()) throw Error("no_prompts", "synthesis needs at least one prompt");

  struct Slot_ {
    std::optional<Trajectory> trajectory;
    EpisodeLog log;
  };
  std::vector<Slot_> slots(prompts.size());

  auto work = [&](std::size_t i) {
    CounterRng rng(master_seed, i);
    EpisodeResult episode = run_episode(prompts[i], adapters, options.episode, rng, trajectory_id_for(i));
    Slot_& slot = slots[i];
    slot.log = std::move(episode.log);
    if (!episode.trajectory) return;
    try {
      const Canvas baseline = adapters.baseline(prompts[i], episode.trajectory->id + "/baseline", rng());
      const ConsensusResult verdict = consensus_filter(*episode.final_canvas, baseline, adapters.judges, rng);
      episode.trajectory->meta["judge_verdicts"] =
          std::string(verdict.verdicts[0] ? "1" : "0") + (verdict.verdicts[1] ? "1" : "0");
      if (!verdict.retain) {
        slot.log.discard = DiscardReason::consensus_reject;
        slot.log.detail = "judges did not both prefer the multi-step result";
        return;
      }
    } catch (const std::exception& e) {
      slot.log.discard = DiscardReason::fail_mid;
      slot.log.detail = std::string("FAIL(mid): ") + e.what();
      return;
    }
    slot.trajectory = std::move(episode.trajectory);
  };

  const unsigned threads = std::max(1U, options.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < prompts.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < prompts.size(); i = next.fetch_add(1)) work(i);
      });
    }
  }

  SynthesisResult result;
  result.stats.attempted = prompts.size();
  for (auto& slot : slots) {
    if (slot.trajectory) {
      ++result.stats.retained;
      ++result.stats.iteration_histogram[static_cast<int>(slot.trajectory->image_count())];
      result.trajectories.push_back(std::move(*slot.trajectory));
    } else if (slot.log.discard) {
      ++result.stats.discard_reasons[std::string(to_string(*slot.log.discard))];
    }
    result.logs.push_back(std::move(slot.log));
  }
  result.stats.retention_rate =
      static_cast<double>(result.stats.retained) / static_cast<double>(result.stats.attempted);
  return result;
}

InferenceResult run_inference(std::string_view prompt, const AgentAdapters& adapters, int max_iterations,
                              std::uint64_t seed) {
  if (max_iterations < 1) throw Error("bad_argument", "max_iterations must be at least 1");
  CounterRng rng(seed, 0);
  InferenceResult out;
  out.trajectory.id = "inference";
  out.trajectory.prompt = std::string(prompt);
  const std::uint64_t episode_seed = rng();
  std::optional<Canvas> canvas;
  // Tool steps do not count as iterations; cap them so a looping planner
  // cannot spin forever.
  const int step_guard = 4 * max_iterations + 4;

  for (;;) {
    ReasoningStep step;
    step.index = static_cast<int>(out.trajectory.steps.size());
    if (out.iterations >= max_iterations || step.index >= step_guard) {
      step.reasoning = "Iteration limit reached; returning the current canvas.";
      step.action = Action::terminate();
      out.trajectory.steps.push_back(std::move(step));
      out.forced_stop = true;
      break;
    }
    PlannerContext ctx;
    ctx.prompt = prompt;
    ctx.steps = &out.trajectory.steps;
    ctx.canvas = canvas ? &*canvas : nullptr;
    ctx.episode_seed = episode_seed;
    ctx.iteration = out.iterations;
    PlanDecision decision = adapters.planner(ctx, rng());
    step.reasoning = std::move(decision.reasoning);
    step.action = decision.action;

    if (decision.action.kind == ActionKind::terminate) {
      out.trajectory.steps.push_back(std::move(step));
      break;
    }
    if (decision.action.kind == ActionKind::image_gen) {
      GenerationRequest request;
      request.prompt = prompt;
      request.instruction = decision.instruction.value_or(step.reasoning);
      request.targets = decision.checklist;
      request.previous = canvas ? &*canvas : nullptr;
      request.image_id = "inference/img-" + std::to_string(out.iterations);
      request.source = canvas ? ImageSource::edited : ImageSource::generated;
      std::optional<Canvas> produced = adapters.generator(request, rng());
      if (!produced) {
        throw Error("generator_failure", "generator failed at iteration " + std::to_string(out.iterations));
      }
      step.image = produced->image;
      canvas = std::move(produced);
      ++out.iterations;
    }
    out.trajectory.steps.push_back(std::move(step));
  }
  out.trajectory.terminated = true;
  if (canvas) {
    out.final_image = canvas->image;
    out.final_canvas = std::move(canvas);
  }
  return out;
}

}  // namespace clvr
