// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/trajectory.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "clvr/error.hpp"
#include "clvr/trajectory_json.hpp"

namespace clvr {

ImageRef ImageRef::simulated(std::string id, ImageSource source) {
  ImageRef ref;
  ref.content_hash = blake2b_256(id);
  ref.id = std::move(id);
  ref.source = source;
  return ref;
}

std::size_t Trajectory::image_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const auto& s) { return s.image.has_value(); }));
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

std::string_view to_string(ImageSource source) {
  return source == ImageSource::generated ? "generated" : "edited";
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::image_gen: return "image_gen";
    case ActionKind::terminate: return "terminate";
    case ActionKind::tool: return "tool";
  }
  return "tool";
}

ValidationReport validate_trajectory(const Trajectory& traj, const ValidationOptions& options) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  std::set<std::string> image_ids;
  int previous_index = -1;
  std::size_t images = 0;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& step = traj.steps[i];
    const std::string where = "step " + std::to_string(i);
    if (step.index <= previous_index) {
      add("index_order", where + ": index " + std::to_string(step.index) + " not strictly increasing");
    }
    previous_index = step.index;

    const bool is_gen = step.action.kind == ActionKind::image_gen;
    if (is_gen != step.image.has_value()) {
      add("image_action", where + ": image present iff action is image_gen");
    }
    if (is_gen && step.action.token != kImageGenToken) {
      add("action_token", where + ": image_gen token must be " + std::string(kImageGenToken));
    }
    if (step.action.kind == ActionKind::terminate && step.action.token != kTerminateToken) {
      add("action_token", where + ": terminate token must be " + std::string(kTerminateToken));
    }
    if (step.action.kind == ActionKind::tool && step.action.token.empty()) {
      add("action_token", where + ": tool action needs a name");
    }
    if (step.image) {
      ++images;
      if (!image_ids.insert(step.image->id).second) {
        add("duplicate_image_id", where + ": image id '" + step.image->id + "' repeated");
      }
      if (options.require_passive_pass && step.passive_pass != true) {
        add("passive_pass", where + ": generated image lacks passive_pass = true");
      }
    }
  }

  if (traj.terminated &&
      (traj.steps.empty() || traj.steps.back().action.kind != ActionKind::terminate)) {
    add("terminate_last", "terminated trajectory must end with a terminate action");
  }
  if (options.max_iterations >= 0 && images > static_cast<std::size_t>(options.max_iterations)) {
    add("iteration_budget", std::to_string(images) + " image steps exceed the iteration budget of " +
                                std::to_string(options.max_iterations));
  }
  return report;
}

std::vector<ImageRef> TruncatedSample::context_images() const {
  std::vector<ImageRef> out;
  for (const auto& item : context) {
    if (item.kind == ContextItem::Kind::image) out.push_back(*item.image);
  }
  return out;
}

TruncatedSample truncate_at(const Trajectory& traj, int t) {
  int last_image_index = -1;
  for (const auto& s : traj.steps) {
    if (s.image) last_image_index = s.index;
  }
  if (t < 0 || t > last_image_index) {
    throw Error("out_of_range", "t=" + std::to_string(t) + " outside [0, " +
                                    std::to_string(last_image_index) + "] for trajectory '" +
                                    traj.id + "'");
  }

  TruncatedSample sample;
  sample.trajectory_id = traj.id;
  sample.t = t;
  sample.context.push_back({ContextItem::Kind::prompt, traj.prompt, std::nullopt});
  for (const auto& s : traj.steps) {
    if (s.index < t) {
      sample.context.push_back({ContextItem::Kind::reasoning, s.reasoning, std::nullopt});
      if (s.image) sample.context.push_back({ContextItem::Kind::image, {}, s.image});
      continue;
    }
    if (s.index == t) {
      if (!s.image) {
        throw Error("no_image", "step " + std::to_string(t) + " of trajectory '" + traj.id +
                                    "' carries no image");
      }
      sample.context.push_back({ContextItem::Kind::reasoning, s.reasoning, std::nullopt});
      sample.target = *s.image;
      return sample;
    }
    break;
  }
  throw Error("out_of_range", "no step with index " + std::to_string(t) + " in trajectory '" +
                                  traj.id + "'");
}

std::vector<TruncatedSample> expand_all(const Trajectory& traj) {
  const auto report = validate_trajectory(traj);
  if (!report.ok()) {
    throw Error("invalid_trajectory",
                "trajectory '" + traj.id + "' is invalid: " + report.violations.front().message);
  }
  std::vector<TruncatedSample> out;
  for (const auto& s : traj.steps) {
    if (s.image) out.push_back(truncate_at(traj, s.index));
  }
  return out;
}

// --- ShareGPT ---------------------------------------------------------------

std::string image_placeholder(std::size_t n) { return "<IMG_GEN_" + std::to_string(n) + ">"; }

ShareGptRecord export_sharegpt(const Trajectory& traj) {
  const auto report = validate_trajectory(traj);
  if (!report.ok()) {
    throw Error("invalid_trajectory",
                "trajectory '" + traj.id + "' is invalid: " + report.violations.front().message);
  }
  ShareGptRecord record;
  record.conversations.push_back({"human", traj.prompt});
  for (const auto& s : traj.steps) {
    std::string value = s.reasoning;
    if (s.image) {
      record.images.push_back(*s.image);
      value += "\n" + image_placeholder(record.images.size());
    } else if (s.action.kind == ActionKind::terminate) {
      value += "\n" + std::string(kTerminateToken);
    }
    record.conversations.push_back({"gpt", std::move(value)});
  }
  return record;
}

TrajectorySkeleton TrajectorySkeleton::of(const Trajectory& traj) {
  TrajectorySkeleton sk;
  sk.prompt = traj.prompt;
  for (const auto& s : traj.steps) sk.steps.push_back({s.reasoning, s.action.kind, s.image});
  return sk;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

TrajectorySkeleton parse_record(const ShareGptRecord& record) {
  if (record.conversations.empty() || record.conversations.front().from != "human") {
    throw Error("malformed", "ShareGPT record must open with a human turn");
  }
  TrajectorySkeleton sk;
  sk.prompt = record.conversations.front().value;
  std::size_t next_image = 1;
  for (std::size_t i = 1; i < record.conversations.size(); ++i) {
    const auto& turn = record.conversations[i];
    if (turn.from != "gpt") throw Error("malformed", "turn " + std::to_string(i) + " is not gpt");
    std::string_view value = turn.value;
    TrajectorySkeleton::Step step;
    const std::string placeholder = "\n" + image_placeholder(next_image);
    const std::string terminate = "\n" + std::string(kTerminateToken);
    if (ends_with(value, placeholder)) {
      if (next_image > record.images.size()) {
        throw Error("malformed", placeholder.substr(1) + " has no matching image");
      }
      step.action = ActionKind::image_gen;
      step.image = record.images[next_image - 1];
      value.remove_suffix(placeholder.size());
      ++next_image;
    } else if (ends_with(value, terminate)) {
      step.action = ActionKind::terminate;
      value.remove_suffix(terminate.size());
    } else if (value.find("<IMG_GEN_") != std::string_view::npos) {
      throw Error("malformed", "turn " + std::to_string(i) + ": image placeholder out of order");
    }
    step.reasoning = std::string(value);
    sk.steps.push_back(std::move(step));
  }
  if (next_image - 1 != record.images.size()) {
    throw Error("malformed", "image list longer than placeholder sequence");
  }
  return sk;
}

std::string sharegpt_to_json(const ShareGptRecord& record) {
  json::Json j;
  j["conversations"] = json::Json::array();
  for (const auto& turn : record.conversations) {
    j["conversations"].push_back({{"from", turn.from}, {"value", turn.value}});
  }
  j["images"] = json::Json::array();
  for (const auto& image : record.images) j["images"].push_back(json::image_to_json(image));
  return j.dump();
}

ShareGptRecord sharegpt_from_json(std::string_view text) {
  ShareGptRecord record;
  try {
    const auto j = json::Json::parse(text);
    for (const auto& turn : j.at("conversations")) {
      record.conversations.push_back(
          {turn.at("from").get<std::string>(), turn.at("value").get<std::string>()});
    }
    for (const auto& image : j.at("images")) record.images.push_back(json::image_from_json(image));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed", std::string("ShareGPT JSON: ") + e.what());
  }
  return record;
}

// --- JSON mapping -------------------------------------------------------------

namespace json {

Json image_to_json(const ImageRef& image) {
  Json j;
  j["id"] = image.id;
  j["source"] = std::string(to_string(image.source));
  j["content_hash"] = to_hex(image.content_hash);
  if (image.uri) j["uri"] = *image.uri;
  return j;
}

ImageRef image_from_json(const Json& j) {
  ImageRef image;
  image.id = j.at("id").get<std::string>();
  const auto source = j.at("source").get<std::string>();
  if (source == "generated") {
    image.source = ImageSource::generated;
  } else if (source == "edited") {
    image.source = ImageSource::edited;
  } else {
    throw Error("malformed", "unknown image source '" + source + "'");
  }
  image.content_hash = digest_from_hex(j.at("content_hash").get<std::string>());
  if (auto it = j.find("uri"); it != j.end() && !it->is_null()) image.uri = it->get<std::string>();
  return image;
}

Json step_to_json(const ReasoningStep& step) {
  Json j;
  j["index"] = step.index;
  j["reasoning"] = step.reasoning;
  j["action"] = {{"kind", std::string(to_string(step.action.kind))}, {"token", step.action.token}};
  if (step.image) j["image"] = image_to_json(*step.image);
  if (step.passive_pass) j["passive_pass"] = *step.passive_pass;
  j["active_gaps"] = step.active_gaps;
  return j;
}

ReasoningStep step_from_json(const Json& j) {
  ReasoningStep step;
  step.index = j.at("index").get<int>();
  step.reasoning = j.at("reasoning").get<std::string>();
  const auto& action = j.at("action");
  const auto kind = action.at("kind").get<std::string>();
  step.action.token = action.at("token").get<std::string>();
  if (kind == "image_gen") {
    step.action.kind = ActionKind::image_gen;
  } else if (kind == "terminate") {
    step.action.kind = ActionKind::terminate;
  } else if (kind == "tool") {
    step.action.kind = ActionKind::tool;
  } else {
    throw Error("malformed", "unknown action kind '" + kind + "'");
  }
  if (auto it = j.find("image"); it != j.end() && !it->is_null()) step.image = image_from_json(*it);
  if (auto it = j.find("passive_pass"); it != j.end() && !it->is_null()) {
    step.passive_pass = it->get<bool>();
  }
  if (auto it = j.find("active_gaps"); it != j.end()) {
    step.active_gaps = it->get<std::vector<std::string>>();
  }
  return step;
}

Json trajectory_to_json(const Trajectory& traj) {
  Json j;
  j["id"] = traj.id;
  j["prompt"] = traj.prompt;
  j["terminated"] = traj.terminated;
  j["meta"] = Json::object();
  for (const auto& [k, v] : traj.meta) j["meta"][k] = v;
  j["steps"] = Json::array();
  for (const auto& s : traj.steps) j["steps"].push_back(step_to_json(s));
  return j;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory traj;
  traj.id = j.at("id").get<std::string>();
  traj.prompt = j.at("prompt").get<std::string>();
  traj.terminated = j.at("terminated").get<bool>();
  if (auto it = j.find("meta"); it != j.end()) {
    traj.meta = it->get<std::map<std::string, std::string>>();
  }
  for (const auto& s : j.at("steps")) traj.steps.push_back(step_from_json(s));
  return traj;
}

Json context_to_json(const std::vector<ContextItem>& context) {
  Json arr = Json::array();
  for (const auto& item : context) {
    switch (item.kind) {
      case ContextItem::Kind::prompt: arr.push_back({{"type", "prompt"}, {"text", item.text}}); break;
      case ContextItem::Kind::reasoning:
        arr.push_back({{"type", "reasoning"}, {"text", item.text}});
        break;
      case ContextItem::Kind::image:
        arr.push_back({{"type", "image"}, {"image", image_to_json(*item.image)}});
        break;
    }
  }
  return arr;
}

Json sample_to_json(const TruncatedSample& sample) {
  Json j;
  j["trajectory_id"] = sample.trajectory_id;
  j["t"] = sample.t;
  j["context"] = context_to_json(sample.context);
  j["target"] = image_to_json(sample.target);
  return j;
}

}  // namespace json

// --- JSONL ------------------------------------------------------------------

std::string trajectory_to_json_line(const Trajectory& traj) {
  return json::trajectory_to_json(traj).dump();
}

std::vector<Trajectory> parse_trajectory_jsonl(std::string_view bytes) {
  std::vector<Trajectory> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Trajectory traj;
    try {
      traj = json::trajectory_from_json(json::Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed", "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("malformed", "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(traj.id).second) {
      throw Error("duplicate_id", "line " + std::to_string(line_no) + ": duplicate trajectory id '" +
                                      traj.id + "'");
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::string serialize_jsonl(const std::vector<Trajectory>& trajectories) {
  std::string out;
  for (const auto& t : trajectories) {
    out += trajectory_to_json_line(t);
    out += '\n';
  }
  return out;
}

}  // namespace clvr
