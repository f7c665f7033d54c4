// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "clvr/alignment.hpp"
#include "clvr/controller.hpp"
#include "clvr/geometry.hpp"
#include "clvr/geometry_lab.hpp"
#include "clvr/merge.hpp"
#include "clvr/probe.hpp"
#include "clvr/sim_env.hpp"
#include "clvr/stats.hpp"
#include "clvr/tensor_map.hpp"
#include "clvr/trajectory.hpp"
#include "oracles.hpp"

namespace {

using namespace clvr;

// Median |cos| bound for the trained decoupling toy (seed 13, default
// config), measured once at 0.1147 and rounded up.
constexpr double kDecoupleMedianBound = 0.12;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail << what;
    }
  }
};

std::string path(const char* rel) { return std::string(CLVR_SOURCE_DIR) + "/" + rel; }

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool bitwise_equal(const TensorMap& a, const TensorMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, t] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second.shape != t.shape) return false;
    if (std::memcmp(it->second.data.data(), t.data.data(), t.numel() * sizeof(float)) != 0) return false;
  }
  return true;
}

// --- 1 ------------------------------------------------------------------------------

void power_law(Check& c) {
  const auto pts = probe::read_capacity_csv(read_file(path("data/probe_table.csv")), "single_step");
  c.require(pts.size() == 7, "expected 7 single-step rows");
  const auto f = probe::fit_power_law(pts);
  c.detail << "slope " << fmt(f.slope) << " R2 " << fmt(f.r_squared) << " rho " << fmt(f.spearman_rho) << " ";
  c.require(within(f.slope, 1.075, 0.005), "slope");
  c.require(within(f.r_squared, 0.773, 0.005), "R2");
  c.require(within(f.spearman_rho, 0.964, 0.001), "rho");
}

// --- 2 ------------------------------------------------------------------------------

void wilson(Check& c) {
  const auto ci = stats::wilson_interval(0.8645, 553, 0.95);
  const double se = stats::se_binomial(0.8645, 553);
  const auto n = stats::normal_ci(0.7405, 0.0093, 0.95);
  c.detail << "wilson [" << fmt(ci.low) << ", " << fmt(ci.high) << "] se " << fmt(se) << " normal [" << fmt(n.low)
           << ", " << fmt(n.high) << "] ";
  c.require(within(ci.low, 0.8333, 0.0015) && within(ci.high, 0.8904, 0.0015), "wilson");
  c.require(within(se, 0.0146, 0.0003), "se");
  c.require(within(n.low, 0.7223, 0.0002) && within(n.high, 0.7588, 0.0002), "normal ci");
}

// --- 3 ------------------------------------------------------------------------------

void nfe(Check& c) {
  const auto full = stats::nfe({28, true, 1});
  const auto fast = stats::nfe({4, false, 1});
  const double sp = stats::speedup(287.0, 25.5);
  c.detail << "nfe " << full << " -> " << fast << " speedup " << fmt(sp) << " ";
  c.require(full == 56 && fast == 4, "nfe");
  c.require(within(sp, 11.25, 0.01), "speedup");
}

// --- 4 ------------------------------------------------------------------------------

/// Values on a 2^-10 grid so that base + s * delta is exact in f32 for the
/// scales used below.
TensorMap grid_checkpoint(CounterRng& rng, const TensorMap& like, int range) {
  TensorMap out = like;
  for (auto& [name, t] : out) {
    for (auto& v : t.data) v = static_cast<float>(rng.between(-range, range)) / 1024.0f;
  }
  return out;
}

void merge_suite(Check& c) {
  CounterRng rng(4004);
  double worst_lora = 0.0;
  double worst_fro = 0.0;
  double worst_homog = 0.0;
  for (int k = 0; k < 100; ++k) {
    const TensorMap base = oracle::random_checkpoint(rng, 32, 64);
    const TensorMap ckpt = oracle::nearby_checkpoint(base, rng, 0.45);
    c.require(bitwise_equal(apply_merge(base, {delta(ckpt, base)}).fused, ckpt),
              "reconstruction failed on checkpoint " + std::to_string(k));

    const int m = static_cast<int>(rng.between(1, 64));
    const int n = static_cast<int>(rng.between(1, 64));
    const int r = static_cast<int>(rng.between(1, std::min(m, n)));
    Tensor a = Tensor::zeros({r, n});
    Tensor b = Tensor::zeros({m, r});
    for (auto& v : a.data) v = oracle::gaussian(rng);
    for (auto& v : b.data) v = oracle::gaussian(rng);
    const double alpha = 2.0 * r;
    const auto expect = oracle::lora_triple_loop(a, b, alpha, r);
    const auto got = expand_lora({"w", a, b, alpha, r}, std::vector<std::int64_t>{m, n}).at("w");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i) {
      num += (got.data[i] - expect[i]) * (got.data[i] - expect[i]);
      den += expect[i] * expect[i];
    }
    if (den > 0) worst_lora = std::max(worst_lora, std::sqrt(num / den));

    const double rf = relative_frobenius(base, ckpt);
    worst_fro = std::max(worst_fro, std::abs(rf / oracle::relative_frobenius_naive(base, ckpt) - 1.0));

    const TensorMap gbase = grid_checkpoint(rng, base, 4000);
    const TensorMap gdelta = grid_checkpoint(rng, base, 200);
    TensorMap other = gbase;
    for (auto& [name, t] : other) {
      for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += gdelta.at(name).data[i];
    }
    const double r1 = relative_frobenius(gbase, other);
    for (float s : {-3.0f, -1.0f, 0.25f, 0.5f, 2.0f, 5.0f}) {
      TensorMap scaled = gbase;
      for (auto& [name, t] : scaled) {
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += s * gdelta.at(name).data[i];
      }
      if (r1 > 0) worst_homog = std::max(worst_homog, std::abs(relative_frobenius(gbase, scaled) / (std::abs(s) * r1) - 1.0));
    }
  }
  c.detail << "lora rel err " << fmt(worst_lora) << " frobenius rel err " << fmt(worst_fro) << " homogeneity "
           << fmt(worst_homog) << " ";
  c.require(worst_lora <= 1e-6, "lora");
  c.require(worst_fro <= 1e-12, "frobenius oracle");
  c.require(worst_homog <= 1e-6, "homogeneity");
}

// --- 5 ------------------------------------------------------------------------------

void superposition(Check& c) {
  const auto sweep = geom::run_superpose({});
  geom::SuperposeConfig lin;
  lin.widths = {3, 2};
  lin.activation = geom::Activation::identity;
  const auto control = geom::run_superpose(lin);
  const double control_max = *std::max_element(control.errors.begin(), control.errors.end());
  c.detail << "tanh slope " << fmt(sweep.slope) << " linear max " << fmt(control_max) << " ";
  c.require(sweep.slope >= 1.8 && sweep.slope <= 2.2, "slope");
  c.require(control_max < 1e-8, "linear control");
}

// --- 6 ------------------------------------------------------------------------------

void decoupling(Check& c) {
  const geom::Circle<double> unit;
  CounterRng rng(6006);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d x(geom::normal_draw(rng), geom::normal_draw(rng));
    const Eigen::Vector2d v(geom::normal_draw(rng), geom::normal_draw(rng));
    const auto d = geom::decompose(unit, x, v);
    worst = std::max(worst, std::abs(d.normal.dot(d.tangent)));
  }
  const auto toy = geom::constructed_decoupling_toy(13);
  const auto trained = geom::run_decouple({});
  c.detail << "max <vN,vT> " << fmt(worst) << " toy max|cos| " << fmt(toy.max_abs) << " trained median|cos| "
           << fmt(trained.stats.median_abs) << " (bound " << kDecoupleMedianBound << ") ";
  c.require(worst < 1e-12, "orthogonality");
  c.require(toy.max_abs <= 1e-10, "constructed toy");
  c.require(trained.stats.median_abs <= kDecoupleMedianBound, "trained median");
}

// --- 7 ------------------------------------------------------------------------------

void truncation(Check& c) {
  geom::OdeSetup none;
  none.align_direction.setZero();
  const double gap0 = geom::truncation_gap(none).gap;
  const auto sweep = geom::truncation_sweep({}, {0.2, 0.1, 0.05, 0.02});
  c.detail << "U=0 gap " << fmt(gap0) << " eps slope " << fmt(sweep.slope) << " ";
  c.require(gap0 < 1e-8, "zero field");
  c.require(sweep.slope >= 0.8 && sweep.slope <= 1.2, "slope");
}

// --- 8 ------------------------------------------------------------------------------

std::vector<std::string> sim_prompts(std::size_t n, std::uint64_t seed) {
  static const char* kClauses[] = {"red cube", "blue sphere", "two cats", "clock at 3:15", "sign 'OPEN'", "no people",
                                   "snow", "left of the tree", "glass vase", "three birds"};
  CounterRng rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string p;
    for (auto k = rng.between(1, 7); k > 0; --k) p += std::string(p.empty() ? "" : "; ") + kClauses[rng.below(10)];
    out.push_back(p);
  }
  return out;
}

void controller(Check& c) {
  std::size_t episodes = 0;
  std::size_t retained = 0;
  for (double q : {0.0, 0.5, 0.8, 1.0}) {
    sim::SimEnvConfig cfg;
    cfg.per_item_success_prob = q;
    cfg.judge_agreement_prob = q == 1.0 ? 1.0 : 0.7;
    // Faults only on the intermediate legs; the exact-retention legs are the perfect and hopeless worlds.
    cfg.tool_fault_prob = q == 0.0 || q == 1.0 ? 0.0 : 0.1;
    const auto adapters = sim::make_adapters(cfg);
    const auto prompts = sim_prompts(2500, 800 + static_cast<std::uint64_t>(q * 10));
    SynthesisOptions opts;
    opts.threads = 1;
    const auto one = synthesize_dataset(prompts, adapters, opts, 8);
    opts.threads = 4;
    const auto four = synthesize_dataset(prompts, adapters, opts, 8);
    episodes += prompts.size();
    retained += one.stats.retained;
    c.require(serialize_jsonl(one.trajectories) == serialize_jsonl(four.trajectories),
              "thread count changed the dataset at q=" + fmt(q));
    for (const auto& t : one.trajectories) {
      ValidationOptions v;
      v.require_passive_pass = true;
      c.require(validate_trajectory(t, v).ok(), "retained trajectory " + t.id + " fails validation");
      c.require(t.image_count() <= 8, "iteration cap");
    }
    for (const auto& log : one.logs) c.require(log.iterations <= 8, "episode iterations above 8");
    if (q == 1.0) c.require(one.stats.retention_rate == 1.0, "retention at q=1 is " + fmt(one.stats.retention_rate) + "; ");
    if (q == 0.0) c.require(one.stats.retention_rate == 0.0, "retention at q=0 is " + fmt(one.stats.retention_rate) + "; ");
    c.detail << "q=" << q << " retention " << fmt(one.stats.retention_rate) << "; ";
  }
  c.detail << episodes << " episodes, " << retained << " retained ";
  c.require(episodes >= 10000, "episode count");
}

// --- 9 ------------------------------------------------------------------------------

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

void probe_oracles(Check& c) {
  CounterRng rng(9009);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = oracle::random_graph(rng);
    worst = std::max(worst, rel(probe::c_task(g), oracle::c_task_naive(g)));
    // Unit weights isolate the node and edge counts; zero weights isolate R_extra.
    const double nodes_term = oracle::c_task_naive(g, 1, 0, 0, 0, 0, 0, 0);
    const double edges_term = oracle::c_task_naive(g, 0, 1, 0, 0, 0, 0, 0);
    const auto counts = probe::node_edge_counts(g);
    const double n = double(counts.nodes);
    worst = std::max(worst, rel(n * std::log1p(n), nodes_term));
    worst = std::max(worst, rel(double(counts.edges), edges_term));
    worst = std::max(worst, rel(probe::r_extra(g), oracle::c_task_naive(g, 0, 0, 0)));

    std::vector<double> x;
    std::vector<double> y;
    double at = 0.0;
    for (int k = 0; k < 10; ++k) {
      at += 0.01 + rng.uniform() * 20;
      x.push_back(at);
      y.push_back(rng.uniform());
    }
    worst = std::max(worst, rel(probe::auc_pass({x, y, {}}), oracle::trapezoid_naive(x, y)));

    std::vector<probe::ScoreRow> rows;
    const auto prompts = rng.between(1, 6);
    for (std::int64_t p = 0; p < prompts; ++p) {
      for (std::int64_t s : {42, 123, 456, 789}) rows.push_back({"p" + std::to_string(p), s, rng.uniform(), rng.bernoulli(0.5)});
    }
    for (const auto& ps : probe::aggregate_prompts(rows)) {
      double passes = 0.0;
      double recall = 0.0;
      for (const auto& r : rows) {
        if (r.prompt_id == ps.prompt_id) {
          passes += r.pass ? 1.0 : 0.0;
          recall += r.recall;
        }
      }
      worst = std::max(worst, rel(ps.pass, passes / 4.0));
      worst = std::max(worst, rel(ps.recall, recall / 4.0));
    }
  }
  probe::SemanticGraph hand;
  hand.groups = {{"cube", 3, {"red"}}, {"sphere", 1, {}}};
  hand.relations = {{0, "left_of", 1}};
  hand.constraints = {{probe::ConstraintType::count, ""}};
  hand.word_count = 8;
  const double h1 = probe::c_task(hand);
  const double h2 = probe::auc_pass({{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {.1, .2, .3, .4, .5, .6, .7, .8, .9, 1.0}, {}});
  const double h3 = probe::effective_rank(std::vector<double>{3, 1});
  c.detail << "worst rel err " << fmt(worst) << " C_task " << fmt(h1) << " auc " << fmt(h2) << " erank " << fmt(h3) << " ";
  c.require(worst <= 1e-12, "oracle mismatch");
  c.require(within(h1, 14.635, 5e-4), "14.635 case");
  c.require(within(h2, 4.95, 1e-12), "4.95 case");
  c.require(within(h3, 1.3842, 1e-4), "erank case");
}

// --- 10 -----------------------------------------------------------------------------

void reward(Check& c) {
  CounterRng rng(1010);
  double worst = 0.0;
  int branches[2] = {0, 0};
  for (int i = 0; i < 10000; ++i) {
    const int t = static_cast<int>(rng.between(0, 7));
    const double a = rng.uniform();
    const double b = rng.uniform();
    const double got = t == 0 ? align::proxy_reward({0, a, {}}) : align::proxy_reward({t, a, b});
    const double closed = t == 0 ? a : 0.5 * a + 0.5 * b;
    ++branches[t == 0 ? 0 : 1];
    worst = std::max(worst, std::abs(got - closed));
  }
  CounterRng mix(2020);
  int t2i = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) t2i += align::sample_task(mix, {}).i2i ? 0 : 1;
  align::TaskMixWeights only_i2i;
  only_i2i.t2i = 0.0;
  int buckets[4] = {0, 0, 0, 0};
  for (int i = 0; i < draws; ++i) ++buckets[align::sample_task(mix, only_i2i).bucket - 1];
  const double f = double(t2i) / draws;
  c.detail << "max |err| " << fmt(worst) << " (t=0: " << branches[0] << ", t>0: " << branches[1] << ") T2I freq "
           << fmt(f) << " buckets";
  for (int b : buckets) c.detail << " " << fmt(double(b) / draws);
  c.detail << " ";
  c.require(worst <= 2.3e-16 && branches[0] > 0 && branches[1] > 0, "reward closed form");
  c.require(within(f, 0.5, 0.01), "task mix");
  for (int b : buckets) c.require(within(double(b) / draws, 0.25, 0.01), "bucket mix");
}

// --- 11 -----------------------------------------------------------------------------

void formats(Check& c) {
  const std::string dswm = read_file(path("tests/golden/sample.dswm"));
  c.require(encode_container(decode_container(dswm)) == dswm, "container golden");
  const std::string jsonl = read_file(path("tests/golden/sample.jsonl"));
  const auto trajs = parse_trajectory_jsonl(jsonl);
  c.require(!trajs.empty(), "empty jsonl golden");
  c.require(serialize_jsonl(trajs) == jsonl, "jsonl golden");
  for (const auto& t : trajs) {
    const auto rec = export_sharegpt(t);
    const std::string text = sharegpt_to_json(rec);
    c.require(sharegpt_to_json(sharegpt_from_json(text)) == text, "sharegpt round trip");
    c.require(parse_record(rec) == TrajectorySkeleton::of(t), "sharegpt skeleton");
  }
  c.detail << dswm.size() << " container bytes, " << trajs.size() << " trajectories ";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "power-law fit", 1, power_law},        {2, "wilson", 1, wilson},
      {3, "nfe/speedup", 1, nfe},                {4, "merge algebra", 30, merge_suite},
      {5, "superposition", 60, superposition},   {6, "decoupling", 120, decoupling},
      {7, "truncation", 60, truncation},         {8, "controller", 120, controller},
      {9, "probe oracles", 30, probe_oracles},   {10, "proxy reward", 30, reward},
      {11, "format stability", 10, formats},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_s) check.require(false, " over time budget");
    std::printf("%s %2d %-17s %7.3fs  %s\n", check.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                check.detail.str().c_str());
    std::fflush(stdout);
    failures += check.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
