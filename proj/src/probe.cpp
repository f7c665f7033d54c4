// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/probe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>

#include <Eigen/SVD>
#include <json.hpp>

#include "clvr/error.hpp"

namespace clvr::probe {

using Json = nlohmann::ordered_json;

std::string_view to_string(ConstraintType type) {
  switch (type) {
    case ConstraintType::global: return "global";
    case ConstraintType::count: return "count";
    case ConstraintType::text: return "text";
    case ConstraintType::neg: return "neg";
  }
  return "global";
}

ConstraintType constraint_from_string(std::string_view name) {
  if (name == "global") return ConstraintType::global;
  if (name == "count") return ConstraintType::count;
  if (name == "text") return ConstraintType::text;
  if (name == "neg") return ConstraintType::neg;
  throw Error("unknown_constraint", "unknown constraint tag '" + std::string(name) + "'");
}

void SemanticGraph::validate() const {
  if (word_count < 0) throw Error("bad_graph", "word count must be nonnegative");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].count < 1) throw Error("bad_graph", "group " + std::to_string(i) + " has a nonpositive count");
  }
  for (const auto& r : relations) {
    if (r.from >= groups.size() || r.to >= groups.size()) {
      throw Error("dangling_relation", "relation '" + r.word + "' refers to a missing group");
    }
  }
}

std::size_t SemanticGraph::constraint_count(ConstraintType type) const {
  return static_cast<std::size_t>(
      std::count_if(constraints.begin(), constraints.end(), [&](const Constraint& c) { return c.type == type; }));
}

void ComplexityWeights::validate() const {
  for (double v : {alpha, beta, gamma_w, c_global, c_count, c_text, c_neg}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("bad_weights", "complexity weights must be finite and nonnegative");
  }
}

double ComplexityWeights::constraint_weight(ConstraintType type) const {
  switch (type) {
    case ConstraintType::global: return c_global;
    case ConstraintType::count: return c_count;
    case ConstraintType::text: return c_text;
    case ConstraintType::neg: return c_neg;
  }
  return 0.0;
}

// --- DSL -------------------------------------------------------------------------

namespace {

class DslParser {
 public:
  explicit DslParser(std::string_view text) : text_(text) {}

  SemanticGraph parse() {
    SemanticGraph g;
    g.word_count = count_words(text_);
    skip_space();
    if (at_end()) return g;
    statement(g);
    skip_space();
    while (!at_end()) {
      expect(';');
      skip_space();
      statement(g);
      skip_space();
    }
    for (const auto& r : g.relations) {
      if (r.from >= g.groups.size() || r.to >= g.groups.size()) {
        throw Error("dangling_relation", "relation '" + r.word + "' refers to group " +
                                             std::to_string(std::max(r.from, r.to) + 1) + " of " +
                                             std::to_string(g.groups.size()));
      }
    }
    return g;
  }

 private:
  static std::int64_t count_words(std::string_view s) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : s) {
      const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
      if (!space && !in_word) ++n;
      in_word = !space;
    }
    return n;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("syntax", "line " + std::to_string(line_) + ", column " + std::to_string(col_) + ": " + what);
  }

  void expect(char c) {
    if (peek() != c) {
      fail(std::string("expected '") + c + "'" + (at_end() ? " at end of input" : std::string(", got '") + peek() + "'"));
    }
    advance();
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
  }

  std::string word() {
    std::string out;
    while (!at_end() && word_char(peek())) {
      out += peek();
      advance();
    }
    if (out.empty()) fail("expected a word");
    return out;
  }

  std::int64_t integer() {
    std::string digits;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      digits += peek();
      advance();
    }
    if (digits.empty()) fail("expected an integer");
    if (digits.size() > 15) fail("integer too large");
    return std::stoll(digits);
  }

  std::string quoted() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        c = peek();
        advance();
      }
      out += c;
    }
    return out;
  }

  void statement(SemanticGraph& g) {
    if (peek() == '@') {
      advance();
      const std::size_t tag_line = line_;
      const std::size_t tag_col = col_;
      const std::string tag = word();
      if (tag == "rel") {
        relation(g);
      } else if (tag == "count") {
        g.constraints.push_back({ConstraintType::count, {}});
      } else if (tag == "global" || tag == "neg") {
        skip_space();
        expect('(');
        skip_space();
        std::string arg = word();
        skip_space();
        expect(')');
        g.constraints.push_back({tag == "global" ? ConstraintType::global : ConstraintType::neg, std::move(arg)});
      } else if (tag == "text") {
        skip_space();
        expect('(');
        skip_space();
        std::string arg = quoted();
        skip_space();
        expect(')');
        g.constraints.push_back({ConstraintType::text, std::move(arg)});
      } else {
        throw Error("unknown_constraint", "line " + std::to_string(tag_line) + ", column " +
                                              std::to_string(tag_col) + ": unknown tag '@" + tag + "'");
      }
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      group(g);
      return;
    }
    fail(at_end() ? "expected a statement at end of input" : std::string("unexpected '") + peek() + "'");
  }

  void group(SemanticGraph& g) {
    EntityGroup eg;
    eg.count = integer();
    if (eg.count < 1) fail("group count must be at least 1");
    skip_space();
    expect('[');
    skip_space();
    if (peek() != ']') {
      eg.attributes.insert(word());
      skip_space();
      while (peek() == ',') {
        advance();
        skip_space();
        eg.attributes.insert(word());
        skip_space();
      }
    }
    expect(']');
    skip_space();
    eg.label = word();
    g.groups.push_back(std::move(eg));
  }

  void relation(SemanticGraph& g) {
    skip_space();
    expect('(');
    skip_space();
    const std::int64_t from = integer();
    skip_space();
    expect(',');
    skip_space();
    std::string w = word();
    skip_space();
    expect(',');
    skip_space();
    const std::int64_t to = integer();
    skip_space();
    expect(')');
    if (from < 1 || to < 1) throw Error("dangling_relation", "relation '" + w + "' uses group index 0");
    g.relations.push_back({static_cast<std::size_t>(from - 1), std::move(w), static_cast<std::size_t>(to - 1)});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

SemanticGraph parse_dsl(std::string_view text) { return DslParser(text).parse(); }

// --- scoring ---------------------------------------------------------------------

NodeEdgeCounts node_edge_counts(const SemanticGraph& g) {
  NodeEdgeCounts c;
  for (const auto& eg : g.groups) {
    c.nodes += eg.count;
    c.attribute_edges += eg.count * static_cast<std::int64_t>(eg.attributes.size());
  }
  c.edges = c.attribute_edges + static_cast<std::int64_t>(g.relations.size());
  return c;
}

double r_extra(const SemanticGraph& g, const ComplexityWeights& w) {
  double r = 0.0;
  for (auto t : {ConstraintType::global, ConstraintType::count, ConstraintType::text, ConstraintType::neg}) {
    r += w.constraint_weight(t) * static_cast<double>(g.constraint_count(t));
  }
  return r;
}

double c_task(const SemanticGraph& g, const ComplexityWeights& w) {
  const NodeEdgeCounts c = node_edge_counts(g);
  const auto n = static_cast<double>(c.nodes);
  return w.alpha * n * std::log1p(n) + w.beta * static_cast<double>(c.edges) +
         w.gamma_w * std::log1p(static_cast<double>(g.word_count)) + r_extra(g, w);
}

std::string graph_to_json(const SemanticGraph& g) {
  Json j;
  j["groups"] = Json::array();
  for (const auto& eg : g.groups) {
    j["groups"].push_back({{"label", eg.label}, {"count", eg.count}, {"attributes", eg.attributes}});
  }
  j["relations"] = Json::array();
  for (const auto& r : g.relations) j["relations"].push_back({{"from", r.from}, {"word", r.word}, {"to", r.to}});
  j["constraints"] = Json::array();
  for (const auto& c : g.constraints) {
    Json cj{{"type", to_string(c.type)}};
    if (c.type != ConstraintType::count) cj["argument"] = c.argument;
    j["constraints"].push_back(std::move(cj));
  }
  j["word_count"] = g.word_count;
  return j.dump();
}

SemanticGraph graph_from_json(std::string_view text) {
  SemanticGraph g;
  try {
    const Json j = Json::parse(text);
    for (const auto& gj : j.at("groups")) {
      EntityGroup eg;
      eg.label = gj.at("label").get<std::string>();
      eg.count = gj.at("count").get<std::int64_t>();
      if (gj.contains("attributes")) eg.attributes = gj.at("attributes").get<std::set<std::string>>();
      g.groups.push_back(std::move(eg));
    }
    if (j.contains("relations")) {
      for (const auto& rj : j.at("relations")) {
        g.relations.push_back(
            {rj.at("from").get<std::size_t>(), rj.at("word").get<std::string>(), rj.at("to").get<std::size_t>()});
      }
    }
    if (j.contains("constraints")) {
      for (const auto& cj : j.at("constraints")) {
        g.constraints.push_back({constraint_from_string(cj.at("type").get<std::string>()),
                                 cj.value("argument", std::string())});
      }
    }
    g.word_count = j.value("word_count", std::int64_t{0});
  } catch (const Json::exception& e) {
    throw Error("malformed", std::string("annotation JSON: ") + e.what());
  }
  g.validate();
  return g;
}

// --- tiering ---------------------------------------------------------------------

Tiering stratify(std::vector<PromptRecord> records, const std::vector<WordInterval>& intervals) {
  if (records.size() < kTierCount) {
    throw Error("too_few_records", "stratification needs at least 10 records, got " + std::to_string(records.size()));
  }
  if (!intervals.empty() && intervals.size() != kTierCount) {
    throw Error("bad_intervals", "expected 10 word intervals, got " + std::to_string(intervals.size()));
  }
  std::sort(records.begin(), records.end(), [](const PromptRecord& a, const PromptRecord& b) {
    return a.c_task != b.c_task ? a.c_task < b.c_task : a.id < b.id;
  });
  Tiering out;
  const std::size_t n = records.size();
  for (std::size_t k = 0; k < kTierCount; ++k) {
    Tier& tier = out.tiers[k];
    if (!intervals.empty()) tier.interval = intervals[k];
    const std::size_t lo = k * n / kTierCount;
    const std::size_t hi = (k + 1) * n / kTierCount;
    for (std::size_t i = lo; i < hi; ++i) {
      tier.ids.push_back(records[i].id);
      if (!tier.interval.contains(records[i].words)) tier.flagged.push_back(records[i].id);
    }
    tier.median = records[lo + (hi - lo - 1) / 2].c_task;
  }
  return out;
}

// --- trimming ----------------------------------------------------------------------

namespace {

bool remove_one(SemanticGraph& g, std::string& note) {
  // attributes
  std::optional<std::size_t> best_group;
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    if (g.groups[i].attributes.empty()) continue;
    if (!best_group || *g.groups[i].attributes.rbegin() >= *g.groups[*best_group].attributes.rbegin()) best_group = i;
  }
  if (best_group) {
    auto& attrs = g.groups[*best_group].attributes;
    const std::string a = *attrs.rbegin();
    attrs.erase(std::prev(attrs.end()));
    g.word_count = std::max<std::int64_t>(0, g.word_count - 1);
    note = "attribute " + a + " of group " + std::to_string(*best_group + 1);
    return true;
  }
  if (!g.relations.empty()) {
    const Relation r = g.relations.back();
    g.relations.pop_back();
    g.word_count = std::max<std::int64_t>(0, g.word_count - 1);
    note = "relation " + std::to_string(r.from + 1) + " " + r.word + " " + std::to_string(r.to + 1);
    return true;
  }
  if (!g.groups.empty()) {
    std::size_t big = 0;
    for (std::size_t i = 1; i < g.groups.size(); ++i) {
      if (g.groups[i].count > g.groups[big].count) big = i;
    }
    if (--g.groups[big].count == 0) {
      note = "group " + std::to_string(big + 1) + " (" + g.groups[big].label + ")";
      g.groups.erase(g.groups.begin() + static_cast<std::ptrdiff_t>(big));
      g.word_count = std::max<std::int64_t>(0, g.word_count - 1);
    } else {
      note = "count of group " + std::to_string(big + 1) + " to " + std::to_string(g.groups[big].count);
    }
    return true;
  }
  return false;
}

}  // namespace

TrimResult trim(const SemanticGraph& g, const TrimTarget& target, const ComplexityWeights& w) {
  g.validate();
  w.validate();
  TrimResult out;
  out.graph = g;
  double score = c_task(out.graph, w);
  out.scores.push_back(score);
  while (true) {
    const bool c_ok = score >= target.c_min && score <= target.c_max;
    const bool w_ok = out.graph.word_count >= target.w_min && out.graph.word_count <= target.w_max;
    if (c_ok && w_ok) return out;
    // Removals only lower C_task and W.
    if (score < target.c_min || out.graph.word_count < target.w_min) break;
    std::string note;
    if (!remove_one(out.graph, note)) break;
    score = c_task(out.graph, w);
    out.removals.push_back(std::move(note));
    out.scores.push_back(score);
  }
  out.feasible = false;
  return out;
}

// --- aggregation ---------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("malformed", "CSV is missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  std::optional<std::size_t> find_column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_csv(std::string_view text) {
  CsvTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error("malformed", "CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                   " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw Error("malformed", "CSV has no header");
  return t;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("malformed", "CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

}  // namespace

std::vector<ScoreRow> parse_scores_csv(std::string_view text) {
  const CsvTable t = read_csv(text);
  const std::size_t ci = t.column("prompt_id");
  const std::size_t cs = t.column("seed");
  const std::size_t cr = t.column("recall");
  const std::size_t cp = t.column("pass");
  std::vector<ScoreRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = t.line_numbers[i];
    ScoreRow s;
    s.prompt_id = row[ci];
    s.seed = static_cast<std::int64_t>(to_double(row[cs], line));
    s.recall = to_double(row[cr], line);
    if (!(s.recall >= 0.0 && s.recall <= 1.0)) {
      throw Error("malformed", "CSV line " + std::to_string(line) + ": recall outside [0, 1]");
    }
    const std::string& p = row[cp];
    if (p == "1" || p == "true") {
      s.pass = true;
    } else if (p == "0" || p == "false") {
      s.pass = false;
    } else {
      throw Error("malformed", "CSV line " + std::to_string(line) + ": pass must be 0/1");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<PromptScore> aggregate_prompts(const std::vector<ScoreRow>& rows, const AggregateOptions& options) {
  std::map<std::string, std::vector<const ScoreRow*>> by_prompt;
  for (const auto& r : rows) by_prompt[r.prompt_id].push_back(&r);
  std::vector<PromptScore> out;
  std::optional<std::size_t> seen_count;
  for (const auto& [id, images] : by_prompt) {
    if (!options.allow_ragged) {
      const std::size_t expected = options.images_per_prompt.value_or(seen_count.value_or(images.size()));
      if (images.size() != expected) {
        throw Error("ragged", "prompt '" + id + "' has " + std::to_string(images.size()) + " images, expected " +
                                  std::to_string(expected));
      }
      seen_count = images.size();
    }
    PromptScore s;
    s.prompt_id = id;
    s.images = images.size();
    std::size_t passes = 0;
    double recall = 0.0;
    for (const ScoreRow* r : images) {
      passes += r->pass ? 1 : 0;
      recall += r->recall;
    }
    const auto n = static_cast<double>(images.size());
    s.pass = options.mode == PassMode::fraction ? static_cast<double>(passes) / n : (passes > 0 ? 1.0 : 0.0);
    s.recall = recall / n;
    out.push_back(std::move(s));
  }
  return out;
}

std::array<TierScore, kTierCount> aggregate_tiers(const std::vector<PromptScore>& prompts, const Tiering& tiering) {
  std::map<std::string, const PromptScore*> index;
  for (const auto& p : prompts) index[p.prompt_id] = &p;
  std::array<TierScore, kTierCount> out{};
  for (std::size_t k = 0; k < kTierCount; ++k) {
    TierScore& ts = out[k];
    for (const auto& id : tiering.tiers[k].ids) {
      auto it = index.find(id);
      if (it == index.end()) throw Error("missing_scores", "no scores for prompt '" + id + "'");
      ts.pass += it->second->pass;
      ts.recall += it->second->recall;
      ++ts.prompts;
    }
    if (ts.prompts > 0) {
      ts.pass /= static_cast<double>(ts.prompts);
      ts.recall /= static_cast<double>(ts.prompts);
    }
  }
  return out;
}

TierCurve make_curve(const Tiering& tiering, const std::array<TierScore, kTierCount>& scores) {
  TierCurve c;
  for (std::size_t k = 0; k < kTierCount; ++k) {
    c.x.push_back(tiering.tiers[k].median);
    c.y.push_back(scores[k].pass);
    c.recall.push_back(scores[k].recall);
  }
  return c;
}

double auc_pass(const TierCurve& curve) {
  if (curve.x.size() != curve.y.size() || curve.x.size() < 2) {
    throw Error("bad_curve", "curve needs matching x and y with at least two points");
  }
  for (std::size_t k = 0; k < curve.x.size(); ++k) {
    if (!(curve.y[k] >= 0.0 && curve.y[k] <= 1.0)) throw Error("bad_curve", "pass rates must lie in [0, 1]");
    if (k > 0 && !(curve.x[k] > curve.x[k - 1])) {
      throw Error("non_monotone", "tier medians must be strictly increasing (point " + std::to_string(k + 1) + ")");
    }
  }
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.x.size(); ++k) {
    area += (curve.x[k + 1] - curve.x[k]) / 2.0 * (curve.y[k] + curve.y[k + 1]);
  }
  return area;
}

// --- spectral capacity ---------------------------------------------------------------

double effective_rank(std::span<const double> singular_values) {
  double top = 0.0;
  for (double s : singular_values) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error("bad_spectrum", "singular values must be finite and nonnegative");
    top = std::max(top, s);
  }
  if (top == 0.0) throw Error("zero_spectrum", "spectrum is all zero");
  double total = 0.0;
  for (double s : singular_values) total += (s / top) * (s / top);
  double entropy = 0.0;
  for (double s : singular_values) {
    const double p = (s / top) * (s / top) / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

IEffResult i_eff(const TensorMap& checkpoint, const std::string& name_filter) {
  std::optional<std::regex> re;
  if (!name_filter.empty()) {
    try {
      re.emplace(name_filter, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error("bad_filter", "invalid name filter: " + std::string(e.what()));
    }
  }
  IEffResult out;
  for (const auto& [name, t] : checkpoint) {
    if (t.shape.size() != 2 || t.numel() == 0) continue;
    if (re && !std::regex_search(name, *re)) continue;
    const Eigen::MatrixXd m = t.matrix().cast<double>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    out.per_matrix[name] = effective_rank(std::span<const double>(sv.data(), static_cast<std::size_t>(sv.size())));
  }
  if (out.per_matrix.empty()) throw Error("empty_filter", "no 2-D tensors match the name filter");
  std::vector<double> values;
  for (const auto& [name, v] : out.per_matrix) values.push_back(v);
  std::sort(values.begin(), values.end());
  out.value = values[(values.size() - 1) / 2];
  return out;
}

// --- power law -----------------------------------------------------------------------

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

PowerLawFit fit_power_law(const std::vector<CapacityPoint>& points) {
  if (points.size() < 3) throw Error("too_few_points", "power-law fit needs at least 3 points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& p : points) {
    if (!(p.i_eff > 0.0) || !(p.auc > 0.0)) throw Error("nonpositive", "power-law fit needs positive values");
    lx.push_back(std::log(p.i_eff));
    ly.push_back(std::log(p.auc));
  }
  const auto n = static_cast<double>(points.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error("degenerate", "all I_eff values are equal");
  PowerLawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : points) {
    xs.push_back(p.i_eff);
    ys.push_back(p.auc);
  }
  fit.spearman_rho = pearson(average_ranks(xs), average_ranks(ys));
  return fit;
}

std::vector<CapacityPoint> read_capacity_csv(std::string_view text, std::string_view paradigm) {
  const CsvTable t = read_csv(text);
  const std::size_t ci = t.column("i_eff");
  const std::size_t ca = t.column("auc_pass");
  const auto cp = t.find_column("paradigm");
  std::vector<CapacityPoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (cp && !paradigm.empty() && row[*cp] != paradigm) continue;
    out.push_back({to_double(row[ci], t.line_numbers[i]), to_double(row[ca], t.line_numbers[i])});
  }
  return out;
}

}  // namespace clvr::probe
