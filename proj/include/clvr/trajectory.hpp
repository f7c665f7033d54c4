// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clvr/hash.hpp"

namespace clvr {

inline constexpr std::string_view kImageGenToken = "<|image_gen|>";
inline constexpr std::string_view kTerminateToken = "<|terminate|>";
inline constexpr int kDefaultMaxIterations = 8;

enum class ImageSource { generated, edited };

struct ImageRef {
  std::string id;
  ImageSource source = ImageSource::generated;
  Digest content_hash{};
  std::optional<std::string> uri;

  /// Simulation images carry no payload; their hash is taken over the id.
  static ImageRef simulated(std::string id, ImageSource source);

  bool operator==(const ImageRef&) const = default;
};

enum class ActionKind { image_gen, terminate, tool };

struct Action {
  ActionKind kind = ActionKind::terminate;
  /// "<|image_gen|>" / "<|terminate|>", or the tool name for tool actions.
  std::string token;

  static Action image_gen() { return {ActionKind::image_gen, std::string(kImageGenToken)}; }
  static Action terminate() { return {ActionKind::terminate, std::string(kTerminateToken)}; }
  static Action tool(std::string name) { return {ActionKind::tool, std::move(name)}; }

  bool operator==(const Action&) const = default;
};

struct ReasoningStep {
  int index = 0;
  std::string reasoning;
  Action action;
  std::optional<ImageRef> image;
  std::optional<bool> passive_pass;
  std::vector<std::string> active_gaps;

  bool operator==(const ReasoningStep&) const = default;
};

struct Trajectory {
  std::string id;
  std::string prompt;
  std::vector<ReasoningStep> steps;
  bool terminated = false;
  std::map<std::string, std::string> meta;

  /// Number of steps that carry an image.
  std::size_t image_count() const;

  bool operator==(const Trajectory&) const = default;
};

struct Violation {
  std::string code;  // e.g. "terminate_last", "iteration_budget"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
};

struct ValidationOptions {
  int max_iterations = kDefaultMaxIterations;
  /// Retained datasets additionally require passive_pass == true on every
  /// image-bearing step.
  bool require_passive_pass = false;
};

ValidationReport validate_trajectory(const Trajectory& traj, const ValidationOptions& options = {});

/// One element of the local multimodal context c_t.
struct ContextItem {
  enum class Kind { prompt, reasoning, image };
  Kind kind = Kind::prompt;
  std::string text;             // prompt or reasoning
  std::optional<ImageRef> image;  // image items only

  bool operator==(const ContextItem&) const = default;
};

struct TruncatedSample {
  std::string trajectory_id;
  int t = 0;
  std::vector<ContextItem> context;
  ImageRef target;

  /// Images already present in the context (C_img), in order.
  std::vector<ImageRef> context_images() const;

  bool operator==(const TruncatedSample&) const = default;
};

/// Builds {prompt, (r_0,x_0), ..., (r_{t-1},x_{t-1}), r_t} with target x_t.
/// t is a step index; steps before t without an image contribute their
/// reasoning only. Throws clvr::Error ("out_of_range", "no_image").
TruncatedSample truncate_at(const Trajectory& traj, int t);

/// One sample per image-bearing step, ordered by t. Throws on an invalid
/// trajectory.
std::vector<TruncatedSample> expand_all(const Trajectory& traj);

// --- ShareGPT export -------------------------------------------------------

struct ShareGptTurn {
  std::string from;  // "human" or "gpt"
  std::string value;
  bool operator==(const ShareGptTurn&) const = default;
};

struct ShareGptRecord {
  std::vector<ShareGptTurn> conversations;
  std::vector<ImageRef> images;
  bool operator==(const ShareGptRecord&) const = default;
};

/// "<IMG_GEN_n>" with 1-based n.
std::string image_placeholder(std::size_t n);

ShareGptRecord export_sharegpt(const Trajectory& traj);

/// The structure recoverable from a ShareGPT record: prompt plus, per
/// assistant turn, the reasoning text, the action and the image (if any).
struct TrajectorySkeleton {
  std::string prompt;
  struct Step {
    std::string reasoning;
    ActionKind action = ActionKind::tool;
    std::optional<ImageRef> image;
    bool operator==(const Step&) const = default;
  };
  std::vector<Step> steps;

  static TrajectorySkeleton of(const Trajectory& traj);
  bool operator==(const TrajectorySkeleton&) const = default;
};

/// Inverse of export_sharegpt up to the skeleton. Throws on a record whose
/// placeholders are not contiguous from 1 or do not match the image list.
TrajectorySkeleton parse_record(const ShareGptRecord& record);

std::string sharegpt_to_json(const ShareGptRecord& record);
ShareGptRecord sharegpt_from_json(std::string_view text);

// --- JSONL ------------------------------------------------------------------

/// Parses one trajectory per non-blank line. Errors name the 1-based line
/// ("malformed") or the repeated id ("duplicate_id").
std::vector<Trajectory> parse_trajectory_jsonl(std::string_view bytes);

/// Deterministic field order, one object per line, trailing newline.
std::string serialize_jsonl(const std::vector<Trajectory>& trajectories);

std::string trajectory_to_json_line(const Trajectory& traj);

std::string_view to_string(ImageSource source);
std::string_view to_string(ActionKind kind);

}  // namespace clvr
