// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Semantic complexity probe: prompt graphs, the C_task score, tiering,
// trimming, judge-score aggregation, AUC over tiers, spectral capacity and
// the capacity/AUC power-law fit.

#pragma once

#include <array>
#include <climits>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clvr/tensor_map.hpp"

namespace clvr::probe {

enum class ConstraintType { global, count, text, neg };

std::string_view to_string(ConstraintType type);
ConstraintType constraint_from_string(std::string_view name);

struct EntityGroup {
  std::string label;
  std::int64_t count = 1;
  std::set<std::string> attributes;
  bool operator==(const EntityGroup&) const = default;
};

/// Group indices are 0-based; the DSL writes them 1-based.
struct Relation {
  std::size_t from = 0;
  std::string word;
  std::size_t to = 0;
  bool operator==(const Relation&) const = default;
};

struct Constraint {
  ConstraintType type = ConstraintType::global;
  std::string argument;  // empty for @count
  bool operator==(const Constraint&) const = default;
};

struct SemanticGraph {
  std::vector<EntityGroup> groups;
  std::vector<Relation> relations;
  std::vector<Constraint> constraints;
  std::int64_t word_count = 0;

  void validate() const;
  std::size_t constraint_count(ConstraintType type) const;
  bool operator==(const SemanticGraph&) const = default;
};

struct ComplexityWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_w = 1.0;
  double c_global = 0.5;
  double c_count = 2.0;
  double c_text = 3.0;
  double c_neg = 1.5;

  void validate() const;
  double constraint_weight(ConstraintType type) const;
};

/// Parses the prompt DSL. Syntax errors carry "line L, column C".
SemanticGraph parse_dsl(std::string_view text);

struct NodeEdgeCounts {
  std::int64_t nodes = 0;
  std::int64_t attribute_edges = 0;
  std::int64_t edges = 0;
  bool operator==(const NodeEdgeCounts&) const = default;
};

NodeEdgeCounts node_edge_counts(const SemanticGraph& g);
double r_extra(const SemanticGraph& g, const ComplexityWeights& w = {});
/// alpha N ln(1+N) + beta E + gamma_w ln(1+W) + R_extra.
double c_task(const SemanticGraph& g, const ComplexityWeights& w = {});

std::string graph_to_json(const SemanticGraph& g);
SemanticGraph graph_from_json(std::string_view text);

// --- tiering -------------------------------------------------------------------

inline constexpr std::size_t kTierCount = 10;

struct PromptRecord {
  std::string id;
  double c_task = 0.0;
  std::int64_t words = 0;
};

struct WordInterval {
  std::int64_t low = 0;
  std::int64_t high = std::numeric_limits<std::int64_t>::max();
  bool contains(std::int64_t w) const { return w >= low && w <= high; }
};

struct Tier {
  std::vector<std::string> ids;
  WordInterval interval;
  double median = 0.0;
  std::vector<std::string> flagged;  // members outside `interval`
};

struct Tiering {
  std::array<Tier, kTierCount> tiers;
};

/// Sorts by (C_task, id) and cuts at deciles: tier k holds sorted positions
/// [floor(k n / 10), floor((k+1) n / 10)). `intervals` is empty
/// (unconstrained) or has one entry per tier.
Tiering stratify(std::vector<PromptRecord> records, const std::vector<WordInterval>& intervals = {});

// --- trimming ------------------------------------------------------------------

struct TrimTarget {
  double c_min = 0.0;
  double c_max = std::numeric_limits<double>::infinity();
  std::int64_t w_min = 0;
  std::int64_t w_max = std::numeric_limits<std::int64_t>::max();
};

struct TrimResult {
  SemanticGraph graph;
  bool feasible = true;
  std::vector<std::string> removals;  // one entry per step, in order
  std::vector<double> scores;         // C_task before the first and after every step
};

/// Removes, one at a time: attributes (lexicographically last first; equal
/// names go to the later group), then relations (last first), then one unit
/// from the largest group (ties: lowest index; a group at zero is dropped).
/// Removing an attribute, relation or whole group also drops one surface
/// word. Constraints are kept. Stops as soon as the graph is in the target.
TrimResult trim(const SemanticGraph& g, const TrimTarget& target, const ComplexityWeights& w = {});

// --- aggregation ---------------------------------------------------------------

struct ScoreRow {
  std::string prompt_id;
  std::int64_t seed = 0;
  double recall = 0.0;
  bool pass = false;
};

/// CSV with header prompt_id,seed,recall,pass.
std::vector<ScoreRow> parse_scores_csv(std::string_view text);

enum class PassMode { fraction, any };

struct AggregateOptions {
  PassMode mode = PassMode::fraction;
  std::optional<std::size_t> images_per_prompt = 4;
  bool allow_ragged = false;
};

struct PromptScore {
  std::string prompt_id;
  double pass = 0.0;
  double recall = 0.0;
  std::size_t images = 0;
};

/// Per-prompt values, ordered by prompt id.
std::vector<PromptScore> aggregate_prompts(const std::vector<ScoreRow>& rows, const AggregateOptions& options = {});

struct TierScore {
  double pass = 0.0;
  double recall = 0.0;
  std::size_t prompts = 0;
};

/// Means over each tier's members. Every member needs a score.
std::array<TierScore, kTierCount> aggregate_tiers(const std::vector<PromptScore>& prompts, const Tiering& tiering);

struct TierCurve {
  std::vector<double> x;  // tier medians of C_task
  std::vector<double> y;  // pass rates
  std::vector<double> recall;
};

TierCurve make_curve(const Tiering& tiering, const std::array<TierScore, kTierCount>& scores);

/// Unnormalized trapezoid sum over consecutive points. x must be strictly
/// increasing and y within [0, 1].
double auc_pass(const TierCurve& curve);

// --- spectral capacity ---------------------------------------------------------

/// exp of the entropy of sigma_i^2 / sum sigma_j^2.
double effective_rank(std::span<const double> singular_values);

struct IEffResult {
  double value = 0.0;
  std::map<std::string, double> per_matrix;
};

/// Median (lower-middle) effective rank over 2-D tensors whose name matches
/// `name_filter` (ECMAScript regex, searched; empty matches everything).
IEffResult i_eff(const TensorMap& checkpoint, const std::string& name_filter = "");

// --- power law -----------------------------------------------------------------

struct CapacityPoint {
  double i_eff = 0.0;
  double auc = 0.0;
};

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double spearman_rho = 0.0;
};

PowerLawFit fit_power_law(const std::vector<CapacityPoint>& points);

/// Reads a CSV with at least the columns i_eff and auc_pass. When a
/// `paradigm` column exists and `paradigm` is non-empty, only matching rows
/// are kept.
std::vector<CapacityPoint> read_capacity_csv(std::string_view text, std::string_view paradigm = "single_step");

}  // namespace clvr::probe
