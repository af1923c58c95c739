#include "mcrl/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mcrl/error.hpp"

namespace mcrl {

namespace {

int count_at(const std::vector<int>& v, int i) {
  return (i >= 0 && static_cast<std::size_t>(i) < v.size()) ? v[static_cast<std::size_t>(i)] : 0;
}

void bump(std::vector<int>& v, int i) {
  if (static_cast<std::size_t>(i) >= v.size()) v.resize(static_cast<std::size_t>(i) + 1, 0);
  ++v[static_cast<std::size_t>(i)];
}

double best_expected_through(const FeatureContext& ctx, NodeId id) {
  double best = -std::numeric_limits<double>::infinity();
  for (int p : ctx.belief.spec().paths_through(id)) best = std::max(best, ctx.paths.expected[static_cast<std::size_t>(p)]);
  return best;
}

}  // namespace

int ClickHistory::node_count(NodeId id) const { return count_at(node, id); }
int ClickHistory::branch_count(NodeId branch_id) const { return count_at(branch, branch_id); }
int ClickHistory::level_count(int depth) const { return count_at(level, depth); }

void ClickHistory::record(const TrialSpec& spec, Computation c) {
  if (c.is_terminate()) return;
  const NodeId id = c.node();
  bump(node, id);
  bump(branch, spec.branch_of(id));
  bump(level, spec.node(id).depth);
}

ClickHistory habit_count_update(ClickHistory h, const TrialSpec& spec, Computation c) {
  h.record(spec, c);
  return h;
}

// -- registry ----------------------------------------------------------------

FeatureRegistry::FeatureRegistry(std::string name, int version, double pruning_threshold)
    : name_(std::move(name)), version_(version), pruning_threshold_(pruning_threshold) {}

void FeatureRegistry::add(FeatureDef def) {
  if (index_of(def.name) >= 0) throw std::invalid_argument("duplicate feature name " + def.name);
  if (!def.eval) throw std::invalid_argument("feature " + def.name + " has no evaluator");
  defs_.push_back(std::move(def));
}

std::string FeatureRegistry::version_tag() const { return name_ + "@" + std::to_string(version_); }

std::vector<std::string> FeatureRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& d : defs_) out.push_back(d.name);
  return out;
}

int FeatureRegistry::index_of(const std::string& feature) const {
  for (std::size_t i = 0; i < defs_.size(); ++i)
    if (defs_[i].name == feature) return static_cast<int>(i);
  return -1;
}

FeatureRegistry FeatureRegistry::without_habitual() const {
  FeatureRegistry out(name_, version_, pruning_threshold_);
  for (const auto& d : defs_)
    if (!d.habitual) out.defs_.push_back(d);
  return out;
}

nlohmann::ordered_json FeatureRegistry::manifest() const {
  nlohmann::ordered_json j;
  j["name"] = name_;
  j["version"] = version_;
  j["pruning_threshold"] = pruning_threshold_;
  auto& fs = j["features"];
  fs = nlohmann::ordered_json::array();
  for (const auto& d : defs_) fs.push_back({{"name", d.name}, {"scale", d.scale}, {"habitual", d.habitual}});
  return j;
}

const FeatureRegistry& default_registry() {
  static const FeatureRegistry reg = [] {
    FeatureRegistry r("mouselab-default", 1, -5.0);
    auto click_only = [](auto fn) {
      return [fn](const FeatureContext& ctx) -> double {
        return ctx.computation.is_terminate() ? 0.0 : fn(ctx, ctx.computation.node());
      };
    };
    r.add({"intercept", "1", false, [](const FeatureContext&) { return 1.0; }});
    r.add({"is_termination", "0/1", false,
           [](const FeatureContext& ctx) { return ctx.computation.is_terminate() ? 1.0 : 0.0; }});
    r.add({"click_cost", "points (lambda on clicks, 0 on terminate)", false,
           click_only([](const FeatureContext& ctx, NodeId) { return ctx.belief.spec().click_cost(); })});
    r.add({"depth", "levels (1..max depth)", false,
           click_only([](const FeatureContext& ctx, NodeId id) { return double(ctx.belief.spec().node(id).depth); })});
    r.add({"is_leaf", "0/1", false, click_only([](const FeatureContext& ctx, NodeId id) {
             return ctx.belief.spec().node(id).depth == ctx.belief.spec().max_depth() ? 1.0 : 0.0;
           })});
    r.add({"is_immediate", "0/1", false,
           click_only([](const FeatureContext& ctx, NodeId id) { return ctx.belief.spec().node(id).depth == 1 ? 1.0 : 0.0; })});
    r.add({"best_expected_through_node", "points", false,
           click_only([](const FeatureContext& ctx, NodeId id) { return best_expected_through(ctx, id); })});
    r.add({"node_std", "points (standard deviation of the hidden value)", false,
           click_only([](const FeatureContext& ctx, NodeId id) {
             return std::sqrt(ctx.belief.spec().node(id).reward.variance());
           })});
    r.add({"max_path_through_node", "points", false, click_only([](const FeatureContext& ctx, NodeId id) {
             double v = -std::numeric_limits<double>::infinity();
             for (int p : ctx.belief.spec().paths_through(id)) v = std::max(v, ctx.paths.max_possible[std::size_t(p)]);
             return v;
           })});
    r.add({"min_path_through_node", "points", false, click_only([](const FeatureContext& ctx, NodeId id) {
             double v = std::numeric_limits<double>::infinity();
             for (int p : ctx.belief.spec().paths_through(id)) v = std::min(v, ctx.paths.min_possible[std::size_t(p)]);
             return v;
           })});
    r.add({"pruning", "0/1 (best expected path through node below threshold)", false,
           click_only([](const FeatureContext& ctx, NodeId id) {
             return best_expected_through(ctx, id) < ctx.pruning_threshold ? 1.0 : 0.0;
           })});
    r.add({"parent_revealed", "0/1 (root counts as revealed)", false, click_only([](const FeatureContext& ctx, NodeId id) {
             const NodeId parent = *ctx.belief.spec().node(id).parent;
             return (parent == kRoot || ctx.belief.is_revealed(parent)) ? 1.0 : 0.0;
           })});
    r.add({"clicks_so_far", "count (carried on terminate, 0 on clicks)", false, [](const FeatureContext& ctx) {
             return ctx.computation.is_terminate() ? double(ctx.belief.n_clicks()) : 0.0;
           }});
    r.add({"termination_value", "points (best expected path value, on terminate)", false,
           [](const FeatureContext& ctx) { return ctx.computation.is_terminate() ? ctx.paths.best : 0.0; }});
    r.add({"habit_same_node", "count", true,
           click_only([](const FeatureContext& ctx, NodeId id) { return double(ctx.history.node_count(id)); })});
    r.add({"habit_same_branch", "count", true, click_only([](const FeatureContext& ctx, NodeId id) {
             return double(ctx.history.branch_count(ctx.belief.spec().branch_of(id)));
           })});
    r.add({"habit_same_level", "count", true, click_only([](const FeatureContext& ctx, NodeId id) {
             return double(ctx.history.level_count(ctx.belief.spec().node(id).depth));
           })});
    return r;
  }();
  return reg;
}

const FeatureRegistry& registry_by_tag(const std::string& tag) {
  if (tag == default_registry().version_tag()) return default_registry();
  throw SchemaError("unknown feature registry '" + tag + "'");
}

FeatureVector compute_features(const BeliefState& b, Computation c, const ClickHistory& h, const FeatureRegistry& reg) {
  if (!b.is_valid(c)) throw InvalidComputation(to_string(c) + " is not valid in this belief state");
  const PathSummary paths = summarize_paths(b);
  const FeatureContext ctx{b, paths, c, h, reg.pruning_threshold()};
  FeatureVector f(static_cast<Eigen::Index>(reg.size()));
  for (std::size_t i = 0; i < reg.size(); ++i) f[static_cast<Eigen::Index>(i)] = reg.def(i).eval(ctx);
  return f;
}

Eigen::MatrixXd feature_matrix(const BeliefState& b, const std::vector<Computation>& computations,
                               const ClickHistory& h, const FeatureRegistry& reg, const PathSummary& paths) {
  Eigen::MatrixXd F(static_cast<Eigen::Index>(computations.size()), static_cast<Eigen::Index>(reg.size()));
  for (std::size_t r = 0; r < computations.size(); ++r) {
    if (!b.is_valid(computations[r])) throw InvalidComputation(to_string(computations[r]) + " is not valid in this belief state");
    const FeatureContext ctx{b, paths, computations[r], h, reg.pruning_threshold()};
    for (std::size_t i = 0; i < reg.size(); ++i)
      F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = reg.def(i).eval(ctx);
  }
  return F;
}

Eigen::MatrixXd feature_matrix(const BeliefState& b, const std::vector<Computation>& computations,
                               const ClickHistory& h, const FeatureRegistry& reg) {
  return feature_matrix(b, computations, h, reg, summarize_paths(b));
}

}  // namespace mcrl
