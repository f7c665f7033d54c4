// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// merge, lora-expand, norm, geomlab

#include <iostream>
#include <memory>

#include "cli_common.hpp"
#include "clvr/error.hpp"
#include "clvr/geometry_lab.hpp"
#include "clvr/merge.hpp"
#include "clvr/tensor_map.hpp"

namespace clvr::cli {

namespace {

Json names(const std::vector<std::string>& v) { return Json(v); }

TensorMap load(Context& ctx, const std::string& path) { return decode_container(ctx.read_input(path)); }

void add_merge(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string base, out, filter;
    std::vector<std::string> deltas;
    bool lenient = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("merge", "Fuse task deltas into a base checkpoint");
  sub->add_option("--base", o->base, "Base checkpoint")->required();
  sub->add_option("--delta", o->deltas, "Delta checkpoint (repeatable, applied in order)")->required();
  sub->add_option("--out", o->out, "Fused checkpoint")->required();
  sub->add_flag("--lenient", o->lenient, "Skip delta keys missing from the base");
  sub->add_option("--filter", o->filter, "Only update base tensors matching this regex");
  sub->callback([&ctx, o] {
    ctx.command = "merge";
    const TensorMap base = load(ctx, o->base);
    std::vector<TensorMap> deltas;
    for (const auto& d : o->deltas) deltas.push_back(load(ctx, d));
    MergeOptions opts;
    opts.mode = o->lenient ? MatchMode::lenient : MatchMode::strict;
    if (!o->filter.empty()) {
      try {
        opts.name_filter.emplace(o->filter, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw UsageError("invalid --filter: " + std::string(e.what()));
      }
    }
    const MergeResult r = apply_merge(base, deltas, opts);
    save_checkpoint(r.fused, o->out);
    Json shifts = Json::array();
    for (const auto& d : deltas) {
      const MergeReport mr = merge_report(base, d);
      shifts.push_back(mr.global_relative_shift ? Json(*mr.global_relative_shift) : Json(nullptr));
    }
    ctx.results = {{"tensors", r.fused.size()},
                   {"skipped_delta_keys", names(r.skipped_delta_keys)},
                   {"zero_filled_keys", names(r.zero_filled_keys)},
                   {"filtered_keys", names(r.filtered_keys)},
                   {"relative_shift_per_delta", shifts}};
    std::cout << "tensors " << r.fused.size() << "\nskipped " << r.skipped_delta_keys.size() << "\nzero_filled "
              << r.zero_filled_keys.size() << "\n";
  });
}

void add_lora(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string adapter, target, out;
    double alpha = 1.0;
    int rank = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("lora-expand", "Expand a LoRA adapter to its dense increment (alpha/r) B A");
  sub->add_option("--adapter", o->adapter, "Adapter container with <target>.lora_A and <target>.lora_B")->required();
  sub->add_option("--target", o->target, "Target tensor name")->required();
  sub->add_option("--alpha", o->alpha, "LoRA alpha")->required();
  sub->add_option("--rank", o->rank, "LoRA rank")->required()->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Write the dense delta as a container");
  sub->callback([&ctx, o] {
    ctx.command = "lora-expand";
    const TensorMap tensors = load(ctx, o->adapter);
    const TensorMap dense = expand_lora(lora_from_container(tensors, o->target, o->alpha, o->rank));
    const Tensor& t = dense.begin()->second;
    if (!o->out.empty()) save_checkpoint(dense, o->out);
    const double fro = frobenius_norm(t);
    ctx.results = {{"target", o->target}, {"shape", t.shape}, {"frobenius", fro}};
    std::cout << o->target << " " << t.shape[0] << "x" << t.shape[1] << " frobenius " << num(fro) << "\n";
  });
}

void add_norm(CLI::App& app, Context& ctx) {
  struct Opts {
    std::string ref, other;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("norm", "Global relative Frobenius distance between two checkpoints");
  sub->add_option("--ref", o->ref, "Reference checkpoint")->required();
  sub->add_option("--other", o->other, "Other checkpoint")->required();
  sub->callback([&ctx, o] {
    ctx.command = "norm";
    const TensorMap ref = load(ctx, o->ref);
    const TensorMap other = load(ctx, o->other);
    const double r = relative_frobenius(ref, other);
    ctx.results = {{"relative_frobenius", r}};
    std::cout << num(r) << "\n";
  });
}

// --- geomlab -------------------------------------------------------------------

Json read_config(Context& ctx, const std::string& path) {
  if (path.empty()) return Json::object();
  try {
    return Json::parse(ctx.read_input(path));
  } catch (const Json::exception& e) {
    throw Error("bad_config", path + ": " + e.what());
  }
}

template <typename T>
void take(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

geom::Activation activation_from(const std::string& s) {
  if (s == "tanh") return geom::Activation::tanh;
  if (s == "identity") return geom::Activation::identity;
  throw Error("bad_config", "activation must be tanh or identity");
}

Eigen::Vector2d vec2(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw Error("bad_config", "expected a 2-vector");
  return {v[0], v[1]};
}

Json stats_json(const geom::CosineStats& s) {
  return {{"cosines", s.cosines},     {"excluded", s.excluded}, {"median_abs", s.median_abs},
          {"mean_abs", s.mean_abs},   {"max_abs", s.max_abs}};
}

void add_geomlab(CLI::App& app, Context& ctx) {
  auto* geo = app.add_subcommand("geomlab", "Synthetic checks of the merge geometry");
  geo->require_subcommand(1);
  auto config = std::make_shared<std::string>();

  auto* sup = geo->add_subcommand("superpose", "Second-order remainder of additive increments");
  sup->add_option("--config", *config, "JSON config");
  sup->callback([&ctx, config] {
    ctx.command = "geomlab superpose";
    const Json j = read_config(ctx, *config);
    geom::SuperposeConfig c;
    try {
      take(j, "widths", c.widths);
      if (j.contains("activation")) c.activation = activation_from(j.at("activation").get<std::string>());
      take(j, "seed", c.seed);
      take(j, "probes", c.probes);
      take(j, "delta_scale", c.delta_scale);
      take(j, "scales", c.scales);
      take(j, "fd_step", c.fd_step);
    } catch (const Json::exception& e) {
      throw Error("bad_config", e.what());
    }
    if (ctx.seed) {
      c.seed = *ctx.seed;
    } else if (auto env = ctx.seed_override(); env && !j.contains("seed")) {
      c.seed = *env;
    }
    const auto sweep = geom::run_superpose(c);
    ctx.results = {{"seed", c.seed}, {"scales", sweep.scales}, {"errors", sweep.errors}, {"slope", sweep.slope}};
    for (std::size_t i = 0; i < sweep.scales.size(); ++i) {
      std::cout << "s " << num(sweep.scales[i]) << " error " << num(sweep.errors[i]) << "\n";
    }
    std::cout << "slope " << num(sweep.slope) << "\n";
  });

  auto* dec = geo->add_subcommand("decouple", "Cosine between trained distill and align increments");
  dec->add_option("--config", *config, "JSON config");
  dec->callback([&ctx, config] {
    ctx.command = "geomlab decouple";
    const Json j = read_config(ctx, *config);
    geom::DecoupleConfig c;
    try {
      take(j, "hidden", c.hidden);
      take(j, "train_points", c.train_points);
      take(j, "probe_points", c.probe_points);
      take(j, "noise", c.noise);
      take(j, "rotation", c.rotation);
      take(j, "base_steps", c.base_steps);
      take(j, "delta_steps", c.delta_steps);
      take(j, "learning_rate", c.learning_rate);
      take(j, "seed", c.seed);
    } catch (const Json::exception& e) {
      throw Error("bad_config", e.what());
    }
    if (ctx.seed) {
      c.seed = *ctx.seed;
    } else if (auto env = ctx.seed_override(); env && !j.contains("seed")) {
      c.seed = *env;
    }
    const auto r = geom::run_decouple(c);
    const auto toy = geom::constructed_decoupling_toy(c.seed);
    ctx.results = {{"seed", c.seed},
                   {"trained", stats_json(r.stats)},
                   {"base_loss", r.base_loss},
                   {"distill_loss", r.distill_loss},
                   {"align_loss", r.align_loss},
                   {"distill_shift", r.distill_shift},
                   {"align_shift", r.align_shift},
                   {"constructed", stats_json(toy)}};
    std::cout << "median_abs_cos " << num(r.stats.median_abs) << "\nmean_abs_cos " << num(r.stats.mean_abs)
              << "\nconstructed_max_abs_cos " << num(toy.max_abs) << "\n";
  });

  auto* tru = geo->add_subcommand("truncation", "One-step jump versus multi-step integration");
  tru->add_option("--config", *config, "JSON config");
  tru->callback([&ctx, config] {
    ctx.command = "geomlab truncation";
    const Json j = read_config(ctx, *config);
    geom::OdeSetup s;
    std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
    try {
      take(j, "contraction_rate", s.contraction_rate);
      if (j.contains("x1")) s.x1 = vec2(j.at("x1"));
      if (j.contains("align_direction")) s.align_direction = vec2(j.at("align_direction"));
      take(j, "t_a", s.t_a);
      take(j, "t_b", s.t_b);
      take(j, "epsilon", s.epsilon);
      take(j, "steps", s.steps);
      take(j, "epsilons", eps);
    } catch (const Json::exception& e) {
      throw Error("bad_config", e.what());
    }
    const auto single = geom::truncation_gap(s);
    const auto sweep = geom::truncation_sweep(s, eps);
    ctx.results = {{"gap", single.gap},
                   {"x_merge", {single.x_merge.x(), single.x_merge.y()}},
                   {"x_reference", {single.x_reference.x(), single.x_reference.y()}},
                   {"epsilons", sweep.epsilons},
                   {"gaps", sweep.gaps},
                   {"slope", sweep.slope}};
    std::cout << "gap " << num(single.gap) << "\n";
    for (std::size_t i = 0; i < sweep.gaps.size(); ++i) {
      std::cout << "epsilon " << num(sweep.epsilons[i]) << " gap " << num(sweep.gaps[i]) << "\n";
    }
    std::cout << "slope " << num(sweep.slope) << "\n";
  });
}

}  // namespace

void register_weight_commands(CLI::App& app, Context& ctx) {
  add_merge(app, ctx);
  add_lora(app, ctx);
  add_norm(app, ctx);
  add_geomlab(app, ctx);
}

}  // namespace clvr::cli
