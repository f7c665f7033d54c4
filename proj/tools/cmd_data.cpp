// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// synthesize, infer, truncate, batch, reward, report

#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"
#include "clvr/alignment.hpp"
#include "clvr/controller.hpp"
#include "clvr/error.hpp"
#include "clvr/sim_env.hpp"
#include "clvr/stats.hpp"
#include "clvr/tensor_map.hpp"
#include "clvr/trajectory.hpp"
#include "clvr/trajectory_json.hpp"

namespace clvr::cli {

namespace {

struct SimSettings {
  sim::SimEnvConfig env;
  SynthesisOptions synthesis;
};

SimSettings read_sim_config(Context& ctx, const std::string& path) {
  SimSettings s;
  if (path.empty()) return s;
  Json j;
  try {
    j = Json::parse(ctx.read_input(path));
    if (j.contains("sim")) {
      const Json& e = j.at("sim");
      s.env.per_item_success_prob = e.value("per_item_success_prob", s.env.per_item_success_prob);
      s.env.plan_min = e.value("plan_min", s.env.plan_min);
      s.env.plan_max = e.value("plan_max", s.env.plan_max);
      s.env.judge_agreement_prob = e.value("judge_agreement_prob", s.env.judge_agreement_prob);
      s.env.tool_fault_prob = e.value("tool_fault_prob", s.env.tool_fault_prob);
      s.env.regression_prob = e.value("regression_prob", s.env.regression_prob);
      s.env.baseline_item_prob = e.value("baseline_item_prob", s.env.baseline_item_prob);
    }
    if (j.contains("episode")) {
      const Json& e = j.at("episode");
      s.synthesis.episode.max_iterations = e.value("max_iterations", s.synthesis.episode.max_iterations);
      if (e.contains("retry_limit")) s.synthesis.episode.budget = RetryBudget(e.at("retry_limit").get<int>());
      const std::string freq = e.value("active_frequency", std::string("on_validate"));
      if (freq == "every_image") {
        s.synthesis.episode.active_frequency = ActiveFrequency::every_image;
      } else if (freq != "on_validate") {
        throw Error("bad_config", "active_frequency must be on_validate or every_image");
      }
    }
    s.synthesis.threads = j.value("threads", s.synthesis.threads);
  } catch (const Json::exception& e) {
    throw Error("bad_config", path + ": " + e.what());
  }
  s.env.validate();
  return s;
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

Json stats_to_json(const SynthesisStats& s) {
  Json j;
  j["attempted"] = s.attempted;
  j["retained"] = s.retained;
  j["retention_rate"] = s.retention_rate;
  j["discard_reasons"] = Json::object();
  for (const auto& [k, v] : s.discard_reasons) j["discard_reasons"][k] = v;
  j["iteration_histogram"] = Json::object();
  for (const auto& [k, v] : s.iteration_histogram) j["iteration_histogram"][std::to_string(k)] = v;
  return j;
}

void add_synthesize(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string prompts, config, out, stats;
    unsigned threads = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synthesize", "Run the simulated closed-loop controller over a prompt list");
  sub->add_option("--prompts", o->prompts, "Prompt file, one prompt per line")->required();
  sub->add_option("--config", o->config, "JSON config with optional \"sim\", \"episode\" and \"threads\"");
  sub->add_option("--out", o->out, "Retained trajectories as JSONL")->required();
  sub->add_option("--stats", o->stats, "Write synthesis statistics JSON");
  sub->add_option("--threads", o->threads, "Worker threads (overrides the config)");
  sub->callback([&ctx, o] {
    ctx.command = "synthesize";
    SimSettings s = read_sim_config(ctx, o->config);
    const std::uint64_t seed = ctx.resolved_seed();
    s.env.master_seed = seed;
    if (o->threads > 0) s.synthesis.threads = o->threads;
    const auto prompts = read_lines(ctx.read_input(o->prompts));
    const SynthesisResult r = synthesize_dataset(prompts, sim::make_adapters(s.env), s.synthesis, seed);
    write_file(o->out, serialize_jsonl(r.trajectories));
    const Json sj = stats_to_json(r.stats);
    if (!o->stats.empty()) write_file(o->stats, sj.dump(2) + "\n");
    ctx.results = sj;
    std::cout << "attempted " << r.stats.attempted << "\nretained " << r.stats.retained << "\nretention_rate "
              << num(r.stats.retention_rate) << "\n";
  });
}

void add_infer(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string prompt_file, prompt, config, out;
    int max_iters = kDefaultMaxIterations;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("infer", "Run the plan/act inference loop against the simulator");
  auto* pf = sub->add_option("--prompt-file", o->prompt_file, "File holding the prompt");
  auto* pt = sub->add_option("--prompt", o->prompt, "Prompt text");
  pf->excludes(pt);
  sub->add_option("--max-iters", o->max_iters, "Image iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--config", o->config, "JSON config with an optional \"sim\" block");
  sub->add_option("--out", o->out, "Write the inference trajectory as one JSON line");
  sub->callback([&ctx, o] {
    ctx.command = "infer";
    if (o->prompt_file.empty() && o->prompt.empty()) throw UsageError("infer needs --prompt-file or --prompt");
    std::string prompt = o->prompt;
    if (!o->prompt_file.empty()) {
      prompt = ctx.read_input(o->prompt_file);
      while (!prompt.empty() && (prompt.back() == '\n' || prompt.back() == '\r')) prompt.pop_back();
    }
    SimSettings s = read_sim_config(ctx, o->config);
    const std::uint64_t seed = ctx.resolved_seed();
    s.env.master_seed = seed;
    const InferenceResult r = run_inference(prompt, sim::make_adapters(s.env), o->max_iters, seed);
    if (!o->out.empty()) write_file(o->out, trajectory_to_json_line(r.trajectory));
    ctx.results = {{"iterations", r.iterations},
                   {"forced_stop", r.forced_stop},
                   {"final_image", r.final_image ? Json(r.final_image->id) : Json(nullptr)},
                   {"trajectory", json::trajectory_to_json(r.trajectory)}};
    std::cout << "iterations " << r.iterations << "\nforced_stop " << (r.forced_stop ? "true" : "false")
              << "\nfinal_image " << (r.final_image ? r.final_image->id : std::string("none")) << "\n";
  });
}

std::vector<Trajectory> load_trajs(Context& ctx, const std::string& path) {
  return parse_trajectory_jsonl(ctx.read_input(path));
}

void add_truncate(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string traj, id, out;
    std::optional<int> t;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("truncate", "Cut trajectories into (context, target) training samples");
  sub->add_option("--traj", o->traj, "Trajectory JSONL")->required();
  sub->add_option("--id", o->id, "Only this trajectory");
  sub->add_option("--t", o->t, "Step index (requires --id); default: every image step");
  sub->add_option("--out", o->out, "Write samples as JSONL instead of stdout");
  sub->callback([&ctx, o] {
    ctx.command = "truncate";
    if (o->t && o->id.empty()) throw UsageError("--t requires --id");
    const auto trajs = load_trajs(ctx, o->traj);
    std::vector<TruncatedSample> samples;
    bool found = o->id.empty();
    for (const auto& tr : trajs) {
      if (!o->id.empty() && tr.id != o->id) continue;
      found = true;
      if (o->t) {
        samples.push_back(truncate_at(tr, *o->t));
      } else {
        for (auto& s : expand_all(tr)) samples.push_back(std::move(s));
      }
    }
    if (!found) throw Error("not_found", "no trajectory with id '" + o->id + "'");
    std::string lines;
    for (const auto& s : samples) lines += json::sample_to_json(s).dump() + "\n";
    if (o->out.empty()) {
      std::cout << lines;
    } else {
      write_file(o->out, lines);
    }
    ctx.results = {{"samples", samples.size()}};
  });
}

void add_batch(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string traj, out, buckets = "1,1,1,1";
    std::size_t n = 16;
    double t2i = 1.0, i2i = 1.0;
    int retries = 16;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("batch", "Sample an RL batch with proxy prompts from trajectories");
  sub->add_option("--traj", o->traj, "Trajectory JSONL")->required();
  sub->add_option("--n", o->n, "Batch size")->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Batch JSONL (default stdout)");
  sub->add_option("--t2i-weight", o->t2i, "T2I mixing weight");
  sub->add_option("--i2i-weight", o->i2i, "I2I mixing weight");
  sub->add_option("--buckets", o->buckets, "I2I step-bucket weights for 1,2,3,>=4");
  sub->add_option("--max-resamples", o->retries, "Redraws allowed for an unmatched task");
  sub->callback([&ctx, o] {
    ctx.command = "batch";
    align::TaskMixWeights w;
    w.t2i = o->t2i;
    w.i2i = o->i2i;
    const auto b = parse_doubles(o->buckets);
    if (b.size() != 4) throw UsageError("--buckets needs four weights");
    std::copy(b.begin(), b.end(), w.i2i_buckets.begin());
    w.validate();
    const auto trajs = load_trajs(ctx, o->traj);
    const auto items =
        align::build_rl_batch(trajs, ctx.resolved_seed(), w, align::simulated_extractor(), {o->n, o->retries});
    std::string lines;
    for (const auto& it : items) lines += align::rl_item_to_json(it) + "\n";
    if (o->out.empty()) {
      std::cout << lines;
    } else {
      write_file(o->out, lines);
    }
    ctx.results = {{"items", items.size()}, {"rl_config", Json::parse(align::rl_config_to_json({}))}};
  });
}

void add_reward(CLI::App& app, Context& ctx) {
  struct Opts {
    int t = 0;
    double t2i = 0.0;
    std::optional<double> i2i;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("reward", "Combine T2I and I2I rewards into the proxy reward");
  sub->add_option("--t", o->t, "Step index")->required()->check(CLI::NonNegativeNumber);
  sub->add_option("--t2i", o->t2i, "T2I reward in [0,1]")->required();
  sub->add_option("--i2i", o->i2i, "I2I reward in [0,1] (required when t > 0)");
  sub->callback([&ctx, o] {
    ctx.command = "reward";
    const double r = align::proxy_reward({o->t, o->t2i, o->i2i});
    ctx.results = {{"t", o->t}, {"reward", r}};
    std::cout << num(r) << "\n";
  });
}

void add_report(CLI::App& app, Context& ctx) {
  auto* rep = app.add_subcommand("report", "Validate or export trajectory files");
  rep->require_subcommand(1);

  struct ValidateOpts {
    std::string traj;
    bool retained = false;
    int max_iters = kDefaultMaxIterations;
  };
  auto v = std::make_shared<ValidateOpts>();
  auto* val = rep->add_subcommand("validate", "Check trajectory invariants");
  val->add_option("--traj", v->traj, "Trajectory JSONL")->required();
  val->add_flag("--retained", v->retained, "Also require passing passive checks on every image step");
  val->add_option("--max-iters", v->max_iters, "Image iteration cap")->check(CLI::PositiveNumber);
  val->callback([&ctx, v] {
    ctx.command = "report validate";
    const auto trajs = load_trajs(ctx, v->traj);
    std::size_t bad = 0;
    Json per = Json::object();
    for (const auto& t : trajs) {
      const auto rep = validate_trajectory(t, {v->max_iters, v->retained});
      Json codes = Json::array();
      for (const auto& viol : rep.violations) {
        codes.push_back(viol.code);
        std::cout << t.id << ": " << viol.code << ": " << viol.message << "\n";
      }
      if (!rep.ok()) ++bad;
      per[t.id] = codes;
    }
    const auto hist = stats::histogram(trajs);
    Json hj = Json::object();
    for (const auto& [k, n] : hist) hj[std::to_string(k)] = n;
    ctx.results = {{"trajectories", trajs.size()}, {"invalid", bad}, {"violations", per}, {"histogram", hj}};
    if (bad > 0) {
      throw Error("invalid_trajectory",
                  std::to_string(bad) + " of " + std::to_string(trajs.size()) + " trajectories failed validation");
    }
    std::cout << trajs.size() << " trajectories ok\n";
  });

  struct ExportOpts {
    std::string traj, out;
  };
  auto e = std::make_shared<ExportOpts>();
  auto* exp = rep->add_subcommand("sharegpt", "Export trajectories as ShareGPT records, one per line");
  exp->add_option("--traj", e->traj, "Trajectory JSONL")->required();
  exp->add_option("--out", e->out, "Output JSONL (default stdout)");
  exp->callback([&ctx, e] {
    ctx.command = "report sharegpt";
    const auto trajs = load_trajs(ctx, e->traj);
    std::string lines;
    for (const auto& t : trajs) lines += sharegpt_to_json(export_sharegpt(t)) + "\n";
    if (e->out.empty()) {
      std::cout << lines;
    } else {
      write_file(e->out, lines);
    }
    ctx.results = {{"records", trajs.size()}};
  });
}

}  // namespace

void register_data_commands(CLI::App& app, Context& ctx) {
  add_synthesize(app, ctx);
  add_infer(app, ctx);
  add_truncate(app, ctx);
  add_batch(app, ctx);
  add_reward(app, ctx);
  add_report(app, ctx);
}

}  // namespace clvr::cli
