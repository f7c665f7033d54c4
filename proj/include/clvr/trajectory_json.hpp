// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// JSON mapping for trajectory types, shared by the JSONL codec, the batch
// writer and the CLI.

#pragma once

#include <json.hpp>

#include "clvr/trajectory.hpp"

namespace clvr::json {

using Json = nlohmann::ordered_json;

Json image_to_json(const ImageRef& image);
ImageRef image_from_json(const Json& j);

Json step_to_json(const ReasoningStep& step);
ReasoningStep step_from_json(const Json& j);

Json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& j);

Json context_to_json(const std::vector<ContextItem>& context);
Json sample_to_json(const TruncatedSample& sample);

}  // namespace clvr::json
