// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// probe, stats

#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"
#include "clvr/error.hpp"
#include "clvr/probe.hpp"
#include "clvr/stats.hpp"
#include "clvr/tensor_map.hpp"
#include "clvr/trajectory.hpp"

namespace clvr::cli {

namespace {

probe::ComplexityWeights parse_weights(const std::string& text) {
  probe::ComplexityWeights w;
  if (text.empty()) return w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--weights expects key=value pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const auto values = parse_doubles(item.substr(eq + 1));
    if (values.size() != 1) throw UsageError("--weights: bad value for '" + key + "'");
    const double v = values.front();
    if (key == "alpha") w.alpha = v;
    else if (key == "beta") w.beta = v;
    else if (key == "gamma_w") w.gamma_w = v;
    else if (key == "c_global") w.c_global = v;
    else if (key == "c_count") w.c_count = v;
    else if (key == "c_text") w.c_text = v;
    else if (key == "c_neg") w.c_neg = v;
    else throw UsageError("--weights: unknown key '" + key + "'");
  }
  w.validate();
  return w;
}

struct GraphSource {
  std::string dsl, dsl_file, annotation;

  void bind(CLI::App* sub) {
    auto* a = sub->add_option("--dsl", dsl, "Prompt in the graph DSL");
    auto* b = sub->add_option("--dsl-file", dsl_file, "File holding a DSL prompt");
    auto* c = sub->add_option("--annotation", annotation, "Annotation JSON file");
    a->excludes(b)->excludes(c);
    b->excludes(c);
  }

  probe::SemanticGraph load(Context& ctx) const {
    if (!dsl.empty()) return probe::parse_dsl(dsl);
    if (!dsl_file.empty()) return probe::parse_dsl(ctx.read_input(dsl_file));
    if (!annotation.empty()) return probe::graph_from_json(ctx.read_input(annotation));
    throw UsageError("one of --dsl, --dsl-file or --annotation is required");
  }
};

Json graph_json(const probe::SemanticGraph& g) { return Json::parse(probe::graph_to_json(g)); }

Json score_json(const probe::SemanticGraph& g, const probe::ComplexityWeights& w) {
  const auto c = probe::node_edge_counts(g);
  return {{"nodes", c.nodes},          {"attribute_edges", c.attribute_edges}, {"edges", c.edges},
          {"words", g.word_count},     {"r_extra", probe::r_extra(g, w)},      {"c_task", probe::c_task(g, w)}};
}

std::vector<probe::PromptRecord> read_records(Context& ctx, const std::string& path) {
  std::stringstream ss(ctx.read_input(path));
  std::string line;
  std::vector<probe::PromptRecord> out;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (header) {
      if (line != "id,c_task,words") throw Error("malformed", path + ": header must be id,c_task,words");
      header = false;
      continue;
    }
    std::stringstream ls(line);
    std::string id, c, w;
    if (!std::getline(ls, id, ',') || !std::getline(ls, c, ',') || !std::getline(ls, w)) {
      throw Error("malformed", path + ": line " + std::to_string(line_no) + " needs three fields");
    }
    try {
      out.push_back({id, std::stod(c), std::stoll(w)});
    } catch (const std::exception&) {
      throw Error("malformed", path + ": line " + std::to_string(line_no) + " has a bad number");
    }
  }
  return out;
}

std::vector<probe::WordInterval> read_intervals(Context& ctx, const std::string& path) {
  if (path.empty()) return {};
  std::vector<probe::WordInterval> out;
  try {
    for (const auto& pair : Json::parse(ctx.read_input(path))) {
      out.push_back({pair.at(0).get<std::int64_t>(), pair.at(1).get<std::int64_t>()});
    }
  } catch (const Json::exception& e) {
    throw Error("bad_config", path + ": intervals must be [[low, high], ...]: " + e.what());
  }
  return out;
}

void add_probe(CLI::App& app, Context& ctx) {
  auto* pr = app.add_subcommand("probe", "Semantic complexity probe analytics");
  pr->require_subcommand(1);
  auto weights = std::make_shared<std::string>();

  {
    struct Opts {
      GraphSource src;
      std::string batch;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("score", "Node/edge counts and C_task of a prompt graph");
    o->src.bind(sub);
    sub->add_option("--batch", o->batch, "File of 'id<TAB>dsl' lines; prints id,c_task,words CSV");
    sub->add_option("--weights", *weights, "Overrides as key=value list (alpha, beta, gamma_w, c_global, ...)");
    sub->callback([&ctx, o, weights] {
      ctx.command = "probe score";
      const auto w = parse_weights(*weights);
      if (!o->batch.empty()) {
        std::stringstream ss(ctx.read_input(o->batch));
        std::string line;
        Json rows = Json::array();
        std::cout << "id,c_task,words\n";
        while (std::getline(ss, line)) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.find_first_not_of(" \t") == std::string::npos) continue;
          const auto tab = line.find('\t');
          if (tab == std::string::npos) throw Error("malformed", "batch line without a tab: " + line);
          const std::string id = line.substr(0, tab);
          const auto g = probe::parse_dsl(line.substr(tab + 1));
          const double c = probe::c_task(g, w);
          std::cout << id << "," << num(c) << "," << g.word_count << "\n";
          rows.push_back({{"id", id}, {"c_task", c}, {"words", g.word_count}});
        }
        ctx.results = {{"records", rows}};
        return;
      }
      const auto g = o->src.load(ctx);
      ctx.results = score_json(g, w);
      for (const auto& [k, v] : ctx.results.items()) {
        std::cout << k << " " << (v.is_number_float() ? num(v.get<double>()) : v.dump()) << "\n";
      }
    });
  }

  {
    struct Opts {
      std::string records, intervals;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("stratify", "Cut scored prompts into ten complexity tiers");
    sub->add_option("--records", o->records, "CSV id,c_task,words")->required();
    sub->add_option("--intervals", o->intervals, "JSON list of ten [low, high] word intervals");
    sub->callback([&ctx, o] {
      ctx.command = "probe stratify";
      const auto t = probe::stratify(read_records(ctx, o->records), read_intervals(ctx, o->intervals));
      Json tiers = Json::array();
      for (std::size_t k = 0; k < probe::kTierCount; ++k) {
        const auto& tier = t.tiers[k];
        tiers.push_back({{"tier", k + 1}, {"median", tier.median}, {"ids", tier.ids}, {"flagged", tier.flagged}});
        std::cout << "tier " << k + 1 << " size " << tier.ids.size() << " median " << num(tier.median)
                  << " flagged " << tier.flagged.size() << "\n";
      }
      ctx.results = {{"tiers", tiers}};
    });
  }

  {
    struct Opts {
      GraphSource src;
      double c_min = 0.0;
      double c_max = std::numeric_limits<double>::infinity();
      std::int64_t w_min = 0;
      std::int64_t w_max = std::numeric_limits<std::int64_t>::max();
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("trim", "Remove secondary elements until the graph fits a target region");
    o->src.bind(sub);
    sub->add_option("--c-min", o->c_min, "Lower C_task bound");
    sub->add_option("--c-max", o->c_max, "Upper C_task bound");
    sub->add_option("--w-min", o->w_min, "Lower word-count bound");
    sub->add_option("--w-max", o->w_max, "Upper word-count bound");
    sub->add_option("--weights", *weights, "Overrides as key=value list");
    sub->callback([&ctx, o, weights] {
      ctx.command = "probe trim";
      const auto w = parse_weights(*weights);
      const auto r = probe::trim(o->src.load(ctx), {o->c_min, o->c_max, o->w_min, o->w_max}, w);
      ctx.results = {{"feasible", r.feasible},
                     {"removals", r.removals},
                     {"scores", r.scores},
                     {"graph", graph_json(r.graph)}};
      for (std::size_t i = 0; i < r.removals.size(); ++i) {
        std::cout << "removed " << r.removals[i] << " -> c_task " << num(r.scores[i + 1]) << "\n";
      }
      if (!r.feasible) {
        throw Error("infeasible", "no trimming reaches the target region (final c_task " + num(r.scores.back()) +
                                      ", words " + std::to_string(r.graph.word_count) + ")");
      }
      std::cout << probe::graph_to_json(r.graph) << "\n";
    });
  }

  {
    struct Opts {
      std::string curve, scores, records;
      bool any = false, ragged = false;
      std::size_t images = 4;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("auc", "Trapezoidal area under the pass-rate curve");
    auto* cv = sub->add_option("--curve", o->curve, "CSV with columns x,y");
    auto* sc = sub->add_option("--scores", o->scores, "Judge scores CSV prompt_id,seed,recall,pass");
    sub->add_option("--records", o->records, "CSV id,c_task,words (with --scores)");
    sub->add_flag("--any", o->any, "A prompt passes when any image passes");
    sub->add_option("--images", o->images, "Images per prompt")->check(CLI::PositiveNumber);
    sub->add_flag("--ragged", o->ragged, "Allow differing image counts");
    cv->excludes(sc);
    sub->callback([&ctx, o] {
      ctx.command = "probe auc";
      probe::TierCurve curve;
      if (!o->curve.empty()) {
        std::stringstream ss(ctx.read_input(o->curve));
        std::string line;
        bool header = true;
        while (std::getline(ss, line)) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.find_first_not_of(" \t") == std::string::npos) continue;
          if (header) {
            if (line != "x,y") throw Error("malformed", "curve CSV header must be x,y");
            header = false;
            continue;
          }
          const auto v = parse_doubles(line);
          if (v.size() != 2) throw Error("malformed", "curve line needs two numbers: " + line);
          curve.x.push_back(v[0]);
          curve.y.push_back(v[1]);
        }
      } else if (!o->scores.empty()) {
        if (o->records.empty()) throw UsageError("--scores needs --records");
        probe::AggregateOptions opts;
        opts.mode = o->any ? probe::PassMode::any : probe::PassMode::fraction;
        opts.images_per_prompt = o->ragged ? std::nullopt : std::optional<std::size_t>(o->images);
        opts.allow_ragged = o->ragged;
        const auto prompts = probe::aggregate_prompts(probe::parse_scores_csv(ctx.read_input(o->scores)), opts);
        const auto tiering = probe::stratify(read_records(ctx, o->records));
        curve = probe::make_curve(tiering, probe::aggregate_tiers(prompts, tiering));
      } else {
        throw UsageError("probe auc needs --curve or --scores");
      }
      const double auc = probe::auc_pass(curve);
      ctx.results = {{"x", curve.x}, {"y", curve.y}, {"recall", curve.recall}, {"auc_pass", auc}};
      std::cout << num(auc) << "\n";
    });
  }

  {
    struct Opts {
      std::string sv, ckpt, filter;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("erank", "Entropy effective rank of a spectrum or a checkpoint (I_eff)");
    auto* s = sub->add_option("--sv", o->sv, "Comma-separated singular values");
    auto* c = sub->add_option("--ckpt", o->ckpt, "Checkpoint container");
    sub->add_option("--filter", o->filter, "Regex selecting weight matrices (with --ckpt)");
    s->excludes(c);
    sub->callback([&ctx, o] {
      ctx.command = "probe erank";
      if (!o->sv.empty()) {
        const auto sv = parse_doubles(o->sv);
        const double r = probe::effective_rank(sv);
        ctx.results = {{"effective_rank", r}};
        std::cout << num(r) << "\n";
        return;
      }
      if (o->ckpt.empty()) throw UsageError("probe erank needs --sv or --ckpt");
      const auto r = probe::i_eff(decode_container(ctx.read_input(o->ckpt)), o->filter);
      Json per = Json::object();
      for (const auto& [name, v] : r.per_matrix) per[name] = v;
      ctx.results = {{"i_eff", r.value}, {"per_matrix", per}};
      std::cout << "i_eff " << num(r.value) << "\n";
    });
  }

  {
    struct Opts {
      std::string points, paradigm = "single_step";
    };
    auto o = std::make_shared<Opts>();
    auto* sub = pr->add_subcommand("fit", "Power-law fit of AUC_pass against I_eff");
    sub->add_option("--points", o->points, "CSV with i_eff and auc_pass columns")->required();
    sub->add_option("--paradigm", o->paradigm, "Keep rows of this paradigm when the column exists ('' keeps all)");
    sub->callback([&ctx, o] {
      ctx.command = "probe fit";
      const auto pts = probe::read_capacity_csv(ctx.read_input(o->points), o->paradigm);
      const auto f = probe::fit_power_law(pts);
      ctx.results = {{"points", pts.size()},
                     {"slope", f.slope},
                     {"intercept", f.intercept},
                     {"r_squared", f.r_squared},
                     {"spearman_rho", f.spearman_rho}};
      std::cout << "slope " << num(f.slope) << "\nintercept " << num(f.intercept) << "\nr_squared "
                << num(f.r_squared) << "\nspearman_rho " << num(f.spearman_rho) << "\n";
    });
  }
}

void add_stats(CLI::App& app, Context& ctx) {
  auto* st = app.add_subcommand("stats", "Uncertainty and efficiency accounting");
  st->require_subcommand(1);

  {
    struct Opts {
      double p = 0.0, confidence = 0.95;
      std::int64_t n = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = st->add_subcommand("wilson", "Binomial SE and Wilson interval");
    sub->add_option("--p", o->p, "Observed proportion")->required();
    sub->add_option("--n", o->n, "Sample size")->required();
    sub->add_option("--confidence", o->confidence, "0.90, 0.95 or 0.99");
    sub->callback([&ctx, o] {
      ctx.command = "stats wilson";
      const auto s = stats::summarize_binomial(o->p, o->n, o->confidence);
      ctx.results = {{"p_hat", s.p_hat},   {"n", s.n},           {"se", s.se},
                     {"ci_low", s.ci_low}, {"ci_high", s.ci_high}, {"confidence", s.confidence}};
      std::cout << "se " << num(s.se) << "\nci " << num(s.ci_low) << " " << num(s.ci_high) << "\n";
    });
  }

  {
    struct Opts {
      int steps = 28, iters = 1;
      bool no_cfg = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = st->add_subcommand("nfe", "Denoiser evaluations per generation");
    sub->add_option("--steps", o->steps, "Sampling steps per image");
    sub->add_flag("--no-cfg", o->no_cfg, "Disable classifier-free guidance");
    sub->add_option("--iters", o->iters, "Image iterations");
    sub->callback([&ctx, o] {
      ctx.command = "stats nfe";
      const auto n = stats::nfe({o->steps, !o->no_cfg, o->iters});
      ctx.results = {{"steps", o->steps}, {"cfg", !o->no_cfg}, {"iterations", o->iters}, {"nfe", n}};
      std::cout << n << "\n";
    });
  }

  {
    auto traj = std::make_shared<std::string>();
    auto* sub = st->add_subcommand("hist", "Image-iteration histogram of a trajectory file");
    sub->add_option("--traj", *traj, "Trajectory JSONL")->required();
    sub->callback([&ctx, traj] {
      ctx.command = "stats hist";
      const auto trajs = parse_trajectory_jsonl(ctx.read_input(*traj));
      const auto h = stats::histogram(trajs);
      Json hj = Json::object();
      for (const auto& [k, n] : h) {
        hj[std::to_string(k)] = n;
        std::cout << k << " " << n << "\n";
      }
      ctx.results = {{"total", trajs.size()}, {"histogram", hj}};
    });
  }

  {
    auto values = std::make_shared<std::string>();
    auto* sub = st->add_subcommand("se", "Standard error of the mean");
    sub->add_option("--values", *values, "Comma-separated values")->required();
    sub->callback([&ctx, values] {
      ctx.command = "stats se";
      const auto v = parse_doubles(*values);
      const double se = stats::se_mean(v);
      ctx.results = {{"n", v.size()}, {"se", se}};
      std::cout << num(se) << "\n";
    });
  }

  {
    struct Opts {
      double mean = 0.0, se = 0.0, confidence = 0.95;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = st->add_subcommand("ci", "Normal confidence interval mean +- z se");
    sub->add_option("--mean", o->mean, "Mean")->required();
    sub->add_option("--se", o->se, "Standard error")->required();
    sub->add_option("--confidence", o->confidence, "0.90, 0.95 or 0.99");
    sub->callback([&ctx, o] {
      ctx.command = "stats ci";
      const auto ci = stats::normal_ci(o->mean, o->se, o->confidence);
      ctx.results = {{"low", ci.low}, {"high", ci.high}};
      std::cout << num(ci.low) << " " << num(ci.high) << "\n";
    });
  }

  {
    struct Opts {
      double base = 0.0, fast = 0.0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = st->add_subcommand("speedup", "Latency ratio base / fast");
    sub->add_option("--base", o->base, "Baseline seconds")->required();
    sub->add_option("--fast", o->fast, "Accelerated seconds")->required();
    sub->callback([&ctx, o] {
      ctx.command = "stats speedup";
      const double s = stats::speedup(o->base, o->fast);
      ctx.results = {{"speedup", s}};
      std::cout << num(s) << "\n";
    });
  }
}

}  // namespace

void register_analysis_commands(CLI::App& app, Context& ctx) {
  add_probe(app, ctx);
  add_stats(app, ctx);
}

}  // namespace clvr::cli
