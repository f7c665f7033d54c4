// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "clvr/probe.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace clvr;
using namespace clvr::probe;
using clvr::testing::error_code;

SemanticGraph example_graph(std::int64_t words = 8) {
  SemanticGraph g;
  g.groups = {{"cube", 3, {"red"}}, {"sphere", 1, {}}};
  g.relations = {{0, "left_of", 1}};
  g.constraints = {{ConstraintType::count, ""}};
  g.word_count = words;
  return g;
}

std::string render(const SemanticGraph& g) {
  std::vector<std::string> stmts;
  for (const auto& grp : g.groups) {
    std::string attrs;
    for (const auto& a : grp.attributes) attrs += (attrs.empty() ? "" : ",") + a;
    stmts.push_back(std::to_string(grp.count) + " [" + attrs + "] " + grp.label);
  }
  for (const auto& r : g.relations) {
    stmts.push_back("@rel(" + std::to_string(r.from + 1) + "," + r.word + "," + std::to_string(r.to + 1) + ")");
  }
  for (const auto& c : g.constraints) {
    switch (c.type) {
      case ConstraintType::count: stmts.push_back("@count"); break;
      case ConstraintType::global: stmts.push_back("@global(" + c.argument + ")"); break;
      case ConstraintType::text: stmts.push_back("@text(\"" + c.argument + "\")"); break;
      case ConstraintType::neg: stmts.push_back("@neg(" + c.argument + ")"); break;
    }
  }
  std::string out;
  for (std::size_t i = 0; i < stmts.size(); ++i) out += (i ? " ; " : "") + stmts[i];
  return out;
}

// --- DSL ------------------------------------------------------------------------

TEST(Dsl, GrammarExample) {
  const auto g = parse_dsl("3 [red] cube ; 1 [] sphere ; @rel(1,left_of,2) ; @count");
  ASSERT_EQ(g.groups.size(), 2u);
  EXPECT_EQ(g.groups[0], (EntityGroup{"cube", 3, {"red"}}));
  EXPECT_EQ(g.groups[1], (EntityGroup{"sphere", 1, {}}));
  EXPECT_EQ(g.relations, (std::vector<Relation>{{0, "left_of", 1}}));
  EXPECT_EQ(g.constraint_count(ConstraintType::count), 1u);
  EXPECT_EQ(g.constraints.size(), 1u);
  EXPECT_EQ(g.word_count, 11);
}

TEST(Dsl, EmptyText) {
  const auto g = parse_dsl("");
  EXPECT_TRUE(g.groups.empty());
  EXPECT_EQ(g.word_count, 0);
}

TEST(Dsl, DanglingRelation) {
  EXPECT_EQ(error_code([] { parse_dsl("1 [] cat ; @rel(1,on,9)"); }), "dangling_relation");
  EXPECT_EQ(error_code([] { parse_dsl("@rel(1,on,9)"); }), "dangling_relation");
}

TEST(Dsl, ErrorsCarryPosition) {
  try {
    parse_dsl("1 [] cat ;\n2 [red cat");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "syntax");
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_EQ(error_code([] { parse_dsl("@shout(x)"); }), "unknown_constraint");
  EXPECT_EQ(error_code([] { parse_dsl("0 [] cat"); }), "syntax");
}

TEST(Dsl, AllConstraintForms) {
  const auto g = parse_dsl(R"(1 [a,b] x ; @global(photoreal) ; @text("OPEN 24/7") ; @neg(people) ; @count)");
  EXPECT_EQ(g.groups[0].attributes, (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(g.constraints[1], (Constraint{ConstraintType::text, "OPEN 24/7"}));
  EXPECT_EQ(g.constraint_count(ConstraintType::neg), 1u);
  EXPECT_EQ(g.constraint_count(ConstraintType::global), 1u);
}

TEST(Dsl, RenderParseRoundTrip) {
  CounterRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    SemanticGraph g = oracle::random_graph(rng);
    SemanticGraph back = parse_dsl(render(g));
    back.word_count = g.word_count;
    ASSERT_EQ(back, g) << render(g);
  }
}

TEST(Annotation, JsonRoundTrip) {
  CounterRng rng(2);
  for (int i = 0; i < 200; ++i) {
    const SemanticGraph g = oracle::random_graph(rng);
    const std::string j = graph_to_json(g);
    ASSERT_EQ(graph_from_json(j), g);
    ASSERT_EQ(graph_to_json(graph_from_json(j)), j);
  }
}

// --- scoring --------------------------------------------------------------------

TEST(Counts, Examples) {
  EXPECT_EQ(node_edge_counts(example_graph()), (NodeEdgeCounts{4, 3, 4}));
  EXPECT_EQ(node_edge_counts({}), (NodeEdgeCounts{0, 0, 0}));
}

TEST(RExtra, Examples) {
  SemanticGraph g;
  g.constraints = {{ConstraintType::text, "x"}, {ConstraintType::count, ""}, {ConstraintType::count, ""}};
  EXPECT_DOUBLE_EQ(r_extra(g), 7.0);
  EXPECT_EQ(r_extra({}), 0.0);
  ComplexityWeights zero{1, 1, 1, 0, 0, 0, 0};
  EXPECT_EQ(r_extra(g, zero), 0.0);
}

TEST(CTask, HandEvaluations) {
  EXPECT_EQ(c_task({}), 0.0);
  SemanticGraph one;
  one.groups = {{"cat", 1, {}}};
  one.word_count = 1;
  EXPECT_NEAR(c_task(one), 2 * std::log(2.0), 1e-12);
  EXPECT_NEAR(c_task(one), 1.3863, 5e-5);
  const double expect = 4 * std::log(5.0) + 4 + std::log(9.0) + 2.0;
  EXPECT_NEAR(c_task(example_graph()), expect, 1e-12);
  EXPECT_NEAR(c_task(example_graph()), 14.635, 5e-4);
}

TEST(CTask, MatchesNaiveOracle) {
  CounterRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const SemanticGraph g = oracle::random_graph(rng);
    const ComplexityWeights w{rng.uniform() * 2, rng.uniform() * 2, rng.uniform() * 2, rng.uniform(),
                              rng.uniform() * 3, rng.uniform() * 4, rng.uniform() * 2};
    const double naive = oracle::c_task_naive(g, w.alpha, w.beta, w.gamma_w, w.c_global, w.c_count, w.c_text, w.c_neg);
    const double got = c_task(g, w);
    ASSERT_LE(std::abs(got - naive), 1e-12 * std::max(1.0, std::abs(naive))) << i;
  }
}

// Adding any element never lowers the score.
TEST(CTask, MonotoneUnderAdditions) {
  CounterRng rng(4);
  for (int i = 0; i < 500; ++i) {
    const SemanticGraph g = oracle::random_graph(rng);
    const double base = c_task(g);
    SemanticGraph more = g;
    more.groups.push_back({"dog", 1, {}});
    EXPECT_GE(c_task(more), base);
    if (!g.groups.empty()) {
      more = g;
      more.groups[0].attributes.insert("zzz_new");
      EXPECT_GE(c_task(more), base);
      more = g;
      more.groups[0].count += 1;
      EXPECT_GE(c_task(more), base);
      more = g;
      more.relations.push_back({0, "near", 0});
      EXPECT_GE(c_task(more), base);
    }
    more = g;
    more.constraints.push_back({static_cast<ConstraintType>(rng.below(4)), "c"});
    EXPECT_GE(c_task(more), base);
  }
}

TEST(Weights, NegativeRejected) {
  ComplexityWeights w;
  w.c_text = -1;
  EXPECT_EQ(error_code([&] { w.validate(); }), "bad_weights");
}

// --- stratify ----------------------------------------------------------------------

TEST(Stratify, DecileMedians) {
  std::vector<PromptRecord> recs;
  for (int i = 100; i >= 1; --i) recs.push_back({"p" + std::to_string(i), double(i), 10});
  const auto t = stratify(recs);
  for (std::size_t k = 0; k < kTierCount; ++k) {
    EXPECT_EQ(t.tiers[k].ids.size(), 10u);
    EXPECT_EQ(t.tiers[k].median, 10.0 * double(k) + 5.0);
    EXPECT_TRUE(t.tiers[k].flagged.empty());
  }
}

TEST(Stratify, TooFewRecords) {
  std::vector<PromptRecord> recs(9, {"x", 1.0, 1});
  EXPECT_EQ(error_code([&] { stratify(recs); }), "too_few_records");
}

TEST(Stratify, TiesBrokenById) {
  std::vector<PromptRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back({"id" + std::string(1, char('t' - i)), 1.0, 3});
  const auto a = stratify(recs);
  std::reverse(recs.begin(), recs.end());
  const auto b = stratify(recs);
  for (std::size_t k = 0; k < kTierCount; ++k) EXPECT_EQ(a.tiers[k].ids, b.tiers[k].ids);
  EXPECT_EQ(a.tiers[0].ids, (std::vector<std::string>{"ida", "idb"}));
}

TEST(Stratify, FlagsWordIntervalViolations) {
  std::vector<PromptRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({"p" + std::to_string(i), double(i), i % 2 ? 50 : 5});
  std::vector<WordInterval> iv(kTierCount, WordInterval{0, 20});
  const auto t = stratify(recs, iv);
  std::size_t flagged = 0;
  for (const auto& tier : t.tiers) flagged += tier.flagged.size();
  EXPECT_EQ(flagged, 5u);
  EXPECT_EQ(error_code([&] { stratify(recs, std::vector<WordInterval>(3)); }), "bad_intervals");
}

TEST(Stratify, MediansNondecreasing) {
  CounterRng rng(5);
  std::vector<PromptRecord> recs;
  for (int i = 0; i < 537; ++i) recs.push_back({"r" + std::to_string(i), rng.uniform() * 80, 10});
  const auto t = stratify(recs);
  std::size_t total = 0;
  for (std::size_t k = 0; k < kTierCount; ++k) {
    total += t.tiers[k].ids.size();
    if (k) EXPECT_GE(t.tiers[k].median, t.tiers[k - 1].median);
  }
  EXPECT_EQ(total, recs.size());
}

// --- trim --------------------------------------------------------------------------

TEST(Trim, AlreadyInsideUnchanged) {
  const auto r = trim(example_graph(), {});
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.graph, example_graph());
  EXPECT_TRUE(r.removals.empty());
}

TEST(Trim, ExampleToTen) {
  TrimTarget target;
  target.c_max = 10.0;
  const auto r = trim(example_graph(), target);
  ASSERT_TRUE(r.feasible);
  EXPECT_LE(oracle::c_task_naive(r.graph), 10.0);
  ASSERT_EQ(r.scores.size(), r.removals.size() + 1);
  EXPECT_NEAR(r.scores.front(), oracle::c_task_naive(example_graph()), 1e-12);
  for (std::size_t i = 1; i < r.scores.size(); ++i) EXPECT_LT(r.scores[i], r.scores[i - 1]);
  EXPECT_NEAR(r.scores.back(), oracle::c_task_naive(r.graph), 1e-12);
  // Attribute first, then the relation.
  EXPECT_TRUE(r.graph.groups[0].attributes.empty());
  EXPECT_EQ(r.graph.constraints, example_graph().constraints);
}

TEST(Trim, InfeasibleReported) {
  TrimTarget target;
  target.c_max = 1.0;  // the @count constraint alone costs 2
  const auto r = trim(example_graph(), target);
  EXPECT_FALSE(r.feasible);
  TrimTarget low;
  low.c_min = 100.0;
  EXPECT_FALSE(trim(example_graph(), low).feasible);
}

TEST(Trim, NeverIncreasesAndTerminates) {
  CounterRng rng(6);
  for (int i = 0; i < 300; ++i) {
    const SemanticGraph g = oracle::random_graph(rng);
    TrimTarget target;
    target.c_max = rng.uniform() * c_task(g);
    const auto r = trim(g, target);
    ASSERT_LE(c_task(r.graph), c_task(g) + 1e-12);
    for (std::size_t k = 1; k < r.scores.size(); ++k) ASSERT_LT(r.scores[k], r.scores[k - 1]);
    if (r.feasible) ASSERT_LE(c_task(r.graph), target.c_max);
    ASSERT_EQ(r.graph.constraints, g.constraints);
  }
}

// --- aggregation -------------------------------------------------------------------

TEST(Aggregate, FractionRule) {
  const std::vector<ScoreRow> rows{{"a", 42, 0.9, true}, {"a", 123, 0.8, true}, {"a", 456, 0.5, false},
                                   {"a", 789, 0.4, false}};
  const auto p = aggregate_prompts(rows);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0].pass, 0.5);
  EXPECT_DOUBLE_EQ(p[0].recall, 0.65);
  AggregateOptions any;
  any.mode = PassMode::any;
  EXPECT_DOUBLE_EQ(aggregate_prompts(rows, any)[0].pass, 1.0);
}

TEST(Aggregate, RaggedRejectedUnlessAllowed) {
  const std::vector<ScoreRow> rows{{"a", 42, 1, true}, {"a", 123, 1, true}, {"a", 456, 1, true}};
  EXPECT_EQ(error_code([&] { aggregate_prompts(rows); }), "ragged");
  AggregateOptions opts;
  opts.allow_ragged = true;
  EXPECT_EQ(aggregate_prompts(rows, opts)[0].images, 3u);
}

TEST(Aggregate, CsvParsing) {
  const auto rows = parse_scores_csv("prompt_id,seed,recall,pass\np1,42,0.5,1\np1,123,0.25,false\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].pass);
  EXPECT_FALSE(rows[1].pass);
  EXPECT_EQ(rows[1].seed, 123);
  EXPECT_EQ(error_code([] { parse_scores_csv("prompt_id,seed,recall,pass\np1,x,0.5,1\n"); }), "malformed");
}

TEST(Aggregate, MatchesBruteForce) {
  CounterRng rng(7);
  const std::int64_t seeds[] = {42, 123, 456, 789};
  std::vector<ScoreRow> rows;
  std::vector<PromptRecord> recs;
  for (int i = 0; i < 120; ++i) {
    const std::string id = "q" + std::to_string(i);
    for (auto s : seeds) rows.push_back({id, s, rng.uniform(), rng.bernoulli(0.6)});
    recs.push_back({id, rng.uniform() * 50, 10});
  }
  const auto tiering = stratify(recs);
  const auto tiers = aggregate_tiers(aggregate_prompts(rows), tiering);
  for (std::size_t k = 0; k < kTierCount; ++k) {
    double pass_sum = 0.0;
    double recall_sum = 0.0;
    for (const auto& id : tiering.tiers[k].ids) {
      double passes = 0.0;
      double recall = 0.0;
      for (const auto& r : rows) {
        if (r.prompt_id != id) continue;
        passes += r.pass ? 1.0 : 0.0;
        recall += r.recall;
      }
      pass_sum += passes / 4.0;
      recall_sum += recall / 4.0;
    }
    const double n = double(tiering.tiers[k].ids.size());
    EXPECT_NEAR(tiers[k].pass, pass_sum / n, 1e-12);
    EXPECT_NEAR(tiers[k].recall, recall_sum / n, 1e-12);
  }
}

TEST(Aggregate, AllPassGivesOne) {
  std::vector<ScoreRow> rows;
  std::vector<PromptRecord> recs;
  for (int i = 0; i < 20; ++i) {
    for (std::int64_t s : {42, 123, 456, 789}) rows.push_back({"p" + std::to_string(i), s, 1.0, true});
    recs.push_back({"p" + std::to_string(i), double(i), 1});
  }
  for (const auto& t : aggregate_tiers(aggregate_prompts(rows), stratify(recs))) EXPECT_EQ(t.pass, 1.0);
  recs.push_back({"unscored", 100.0, 1});
  EXPECT_EQ(error_code([&] { aggregate_tiers(aggregate_prompts(rows), stratify(recs)); }), "missing_scores");
}

// --- AUC ----------------------------------------------------------------------------

TierCurve curve(std::vector<double> x, std::vector<double> y) { return {std::move(x), std::move(y), {}}; }

TEST(Auc, Examples) {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_DOUBLE_EQ(auc_pass(curve(x, std::vector<double>(10, 1.0))), 9.0);
  EXPECT_NEAR(auc_pass(curve(x, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0})), 4.95, 1e-12);
  EXPECT_EQ(auc_pass(curve(x, std::vector<double>(10, 0.0))), 0.0);
}

TEST(Auc, Errors) {
  EXPECT_EQ(error_code([] { auc_pass(curve({1, 3, 2}, {0, 0, 0})); }), "non_monotone");
  EXPECT_EQ(error_code([] { auc_pass(curve({1, 2}, {0, 1.5})); }), "bad_curve");
}

TEST(Auc, ConstantCurveAndOracle) {
  CounterRng rng(8);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x;
    std::vector<double> y;
    double at = rng.uniform() * 5;
    for (int k = 0; k < 10; ++k) {
      at += 0.1 + rng.uniform() * 10;
      x.push_back(at);
      y.push_back(rng.uniform());
    }
    EXPECT_NEAR(auc_pass(curve(x, y)), oracle::trapezoid_naive(x, y), 1e-12);
    const double p = y[0];
    EXPECT_NEAR(auc_pass(curve(x, std::vector<double>(10, p))), p * (x[9] - x[0]), 1e-12);
  }
}

// --- effective rank ---------------------------------------------------------------------

TEST(EffectiveRank, Examples) {
  EXPECT_NEAR(effective_rank(std::vector<double>(5, 1.0)), 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(effective_rank(std::vector<double>{2, 0, 0}), 1.0);
  const double hand = std::exp(-0.9 * std::log(0.9) - 0.1 * std::log(0.1));
  EXPECT_NEAR(effective_rank(std::vector<double>{3, 1}), hand, 1e-12);
  EXPECT_NEAR(effective_rank(std::vector<double>{3, 1}), 1.3842, 1e-4);
  EXPECT_EQ(error_code([] { effective_rank(std::vector<double>{0, 0}); }), "zero_spectrum");
  EXPECT_EQ(error_code([] { effective_rank(std::vector<double>{1, -1}); }), "bad_spectrum");
}

TEST(EffectiveRank, BoundsAndScaleInvariance) {
  CounterRng rng(9);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> s;
    std::size_t nnz = 0;
    for (auto k = rng.between(1, 20); k > 0; --k) {
      const double v = rng.bernoulli(0.2) ? 0.0 : rng.uniform() * 10;
      nnz += v > 0 ? 1 : 0;
      s.push_back(v);
    }
    if (nnz == 0) s.push_back(1.0), nnz = 1;
    const double r = effective_rank(s);
    EXPECT_GE(r, 1.0 - 1e-12);
    EXPECT_LE(r, double(nnz) + 1e-12);
    std::vector<double> t = s;
    for (auto& v : t) v *= 37.5;
    EXPECT_NEAR(effective_rank(t), r, 1e-12 * r);
  }
}

TEST(IEff, MedianOverFilteredMatrices) {
  TensorMap ckpt;
  ckpt["blocks.0.w"] = Tensor::from_matrix(Eigen::MatrixXf::Identity(4, 4));
  ckpt["blocks.1.w"] = Tensor::from_matrix(Eigen::MatrixXf::Identity(2, 2));
  ckpt["blocks.2.w"] = Tensor::from_matrix(Eigen::MatrixXf::Identity(6, 3));
  ckpt["blocks.0.b"] = Tensor({4}, {1, 2, 3, 4});
  ckpt["head.w"] = Tensor::from_matrix(Eigen::MatrixXf::Identity(8, 8));
  const auto r = i_eff(ckpt, "^blocks\\.");
  EXPECT_EQ(r.per_matrix.size(), 3u);
  EXPECT_NEAR(r.value, 3.0, 1e-6);
  EXPECT_EQ(error_code([&] { i_eff(ckpt, "^nothing"); }), "empty_filter");
}

// --- power law ------------------------------------------------------------------------

TEST(PowerLaw, ExactLaw) {
  std::vector<CapacityPoint> pts;
  for (double x : {1.0, 2.0, 5.0, 10.0, 30.0}) pts.push_back({x, 2.0 * std::pow(x, 1.5)});
  const auto f = fit_power_law(pts);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(2.0), 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(f.spearman_rho, 1.0);
}

TEST(PowerLaw, Errors) {
  EXPECT_EQ(error_code([] { fit_power_law({{1, 1}, {2, 2}}); }), "too_few_points");
  EXPECT_EQ(error_code([] { fit_power_law({{1, 1}, {2, 0}, {3, 3}}); }), "nonpositive");
}

TEST(PowerLaw, SlopeInvariantUnderScaling) {
  CounterRng rng(10);
  for (int i = 0; i < 100; ++i) {
    std::vector<CapacityPoint> pts;
    for (int k = 0; k < 7; ++k) pts.push_back({1 + rng.uniform() * 1000, 1 + rng.uniform() * 100});
    const auto a = fit_power_law(pts);
    for (auto& p : pts) p.i_eff *= 12.5;
    const auto b = fit_power_law(pts);
    EXPECT_NEAR(a.slope, b.slope, 1e-9);
    EXPECT_NEAR(a.r_squared, b.r_squared, 1e-9);
    EXPECT_GE(a.r_squared, 0.0);
    EXPECT_LE(a.r_squared, 1.0);
    EXPECT_LE(std::abs(a.spearman_rho), 1.0);
  }
}

TEST(PowerLaw, ProbeTableRows) {
  const auto pts = read_capacity_csv(read_file(clvr::testing::source_path("data/probe_table.csv")));
  ASSERT_EQ(pts.size(), 7u);
  const auto f = fit_power_law(pts);
  EXPECT_NEAR(f.slope, 1.075, 0.005);
  EXPECT_NEAR(f.r_squared, 0.773, 0.005);
  EXPECT_NEAR(f.spearman_rho, 0.964, 0.001);
  EXPECT_EQ(read_capacity_csv(read_file(clvr::testing::source_path("data/probe_table.csv")), "").size(), 8u);
}

}  // namespace
