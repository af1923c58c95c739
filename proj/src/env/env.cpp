#include "mcrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mcrl/error.hpp"

namespace mcrl {

double RewardDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * probs[i];
  return m;
}

double RewardDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) v += probs[i] * (support[i] - m) * (support[i] - m);
  return v;
}

double RewardDistribution::min() const { return *std::min_element(support.begin(), support.end()); }
double RewardDistribution::max() const { return *std::max_element(support.begin(), support.end()); }

bool RewardDistribution::contains(double value) const {
  return std::find(support.begin(), support.end(), value) != support.end();
}

// -- TrialSpec ---------------------------------------------------------------

TrialSpec::TrialSpec(std::vector<NodeSpec> nodes, double click_cost, std::string condition)
    : nodes_(std::move(nodes)), click_cost_(click_cost), condition_(std::move(condition)) {
  const auto n = nodes_.size();
  if (n < 2) throw SchemaError("trial spec needs a root and at least one other node");
  if (!(click_cost_ >= 0.0) || !std::isfinite(click_cost_)) throw SchemaError("click cost must be a non-negative number");

  children_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = nodes_[i];
    if (nd.id != static_cast<NodeId>(i)) throw SchemaError("node ids must be 0..n-1 in order");
    if (i == 0) {
      if (nd.parent) throw SchemaError("node 0 must be the root");
      continue;
    }
    if (!nd.parent) throw SchemaError("node " + std::to_string(i) + " has no parent (only node 0 may be the root)");
    if (*nd.parent < 0 || *nd.parent >= static_cast<NodeId>(n) || *nd.parent == nd.id)
      throw SchemaError("node " + std::to_string(i) + " has an invalid parent");
    children_[static_cast<std::size_t>(*nd.parent)].push_back(nd.id);

    const auto& r = nd.reward;
    if (r.support.empty() || r.support.size() != r.probs.size())
      throw SchemaError("node " + std::to_string(i) + ": support and probabilities must be nonempty and aligned");
    double total = 0.0;
    for (std::size_t k = 0; k < r.support.size(); ++k) {
      if (!std::isfinite(r.support[k]) || !(r.probs[k] >= 0.0))
        throw SchemaError("node " + std::to_string(i) + ": invalid support value or probability");
      total += r.probs[k];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw SchemaError("node " + std::to_string(i) + ": probabilities must sum to 1");
  }

  // Depths by walking to the root; a walk longer than n means a cycle.
  branch_.assign(n, kRoot);
  for (std::size_t i = 1; i < n; ++i) {
    int depth = 0;
    NodeId cur = static_cast<NodeId>(i);
    NodeId below = cur;
    while (cur != kRoot) {
      if (++depth > static_cast<int>(n)) throw SchemaError("node parents form a cycle");
      below = cur;
      cur = *nodes_[static_cast<std::size_t>(cur)].parent;
    }
    nodes_[i].depth = depth;
    branch_[i] = below;
    max_depth_ = std::max(max_depth_, depth);
  }
  nodes_[0].depth = 0;
  nodes_[0].reward = {};

  // Depth-first enumeration with ascending child ids yields lexicographic order.
  for (auto& c : children_) std::sort(c.begin(), c.end());
  Path prefix{kRoot};
  auto walk = [&](auto&& self, NodeId id) -> void {
    const auto& kids = children_[static_cast<std::size_t>(id)];
    if (kids.empty()) {
      paths_.push_back(prefix);
      return;
    }
    for (NodeId k : kids) {
      prefix.push_back(k);
      self(self, k);
      prefix.pop_back();
    }
  };
  walk(walk, kRoot);

  paths_through_.assign(n, {});
  v_min_ = std::numeric_limits<double>::infinity();
  v_max_ = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    double lo = 0.0, hi = 0.0;
    for (NodeId id : paths_[p]) {
      paths_through_[static_cast<std::size_t>(id)].push_back(static_cast<int>(p));
      if (id == kRoot) continue;
      lo += nodes_[static_cast<std::size_t>(id)].reward.min();
      hi += nodes_[static_cast<std::size_t>(id)].reward.max();
    }
    v_min_ = std::min(v_min_, lo);
    v_max_ = std::max(v_max_, hi);
  }
}

const NodeSpec& TrialSpec::node(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) throw std::out_of_range("node id " + std::to_string(id));
  return nodes_[static_cast<std::size_t>(id)];
}

const std::vector<int>& TrialSpec::paths_through(NodeId id) const {
  node(id);
  return paths_through_[static_cast<std::size_t>(id)];
}

NodeId TrialSpec::branch_of(NodeId id) const {
  node(id);
  return branch_[static_cast<std::size_t>(id)];
}

const std::vector<NodeId>& TrialSpec::children(NodeId id) const {
  node(id);
  return children_[static_cast<std::size_t>(id)];
}

bool TrialSpec::is_path(std::span<const NodeId> path) const {
  if (path.empty() || path.front() != kRoot) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i] <= 0 || path[i] >= static_cast<NodeId>(nodes_.size())) return false;
    if (nodes_[static_cast<std::size_t>(path[i])].parent != path[i - 1]) return false;
  }
  return children_[static_cast<std::size_t>(path.back())].empty();
}

bool operator==(const TrialSpec& a, const TrialSpec& b) {
  if (a.click_cost_ != b.click_cost_ || a.condition_ != b.condition_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.parent != y.parent || x.reward.support != y.reward.support || x.reward.probs != y.reward.probs) return false;
  }
  return true;
}

// -- GroundTruth -------------------------------------------------------------

void GroundTruth::validate(const TrialSpec& spec) const {
  if (rewards.size() != spec.num_nodes()) throw SchemaError("ground truth has the wrong number of nodes");
  for (std::size_t i = 1; i < rewards.size(); ++i) {
    if (!spec.node(static_cast<NodeId>(i)).reward.contains(rewards[i]))
      throw SchemaError("ground truth value of node " + std::to_string(i) + " is outside its support");
  }
}

GroundTruth sample_ground_truth(const TrialSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream::ground_truth));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GroundTruth truth;
  truth.seed = seed;
  truth.rewards.assign(spec.num_nodes(), 0.0);
  for (std::size_t i = 1; i < spec.num_nodes(); ++i) {
    const auto& r = spec.node(static_cast<NodeId>(i)).reward;
    const double u = unit(rng);
    double acc = 0.0;
    std::size_t pick = r.support.size() - 1;
    for (std::size_t k = 0; k < r.support.size(); ++k) {
      acc += r.probs[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    truth.rewards[i] = r.support[pick];
  }
  return truth;
}

// -- Computation -------------------------------------------------------------

Computation Computation::click(NodeId node) {
  if (node <= kRoot) throw InvalidComputation("cannot click node " + std::to_string(node));
  return Computation(node);
}

Computation Computation::from_code(int code) {
  if (code < 0) throw InvalidComputation("negative computation code " + std::to_string(code));
  return Computation(code);
}

NodeId Computation::node() const {
  if (is_terminate()) throw InvalidComputation("terminate has no node");
  return node_;
}

std::string to_string(Computation c) {
  return c.is_terminate() ? std::string("terminate") : "click(" + std::to_string(c.node()) + ")";
}

// -- BeliefState -------------------------------------------------------------

BeliefState::BeliefState(SpecPtr spec) : spec_(std::move(spec)) {
  if (!spec_) throw std::invalid_argument("belief state needs a trial spec");
  values_.assign(spec_->num_nodes(), 0.0);
  revealed_.assign(spec_->num_nodes(), 0);
  for (std::size_t i = 1; i < values_.size(); ++i) values_[i] = spec_->node(static_cast<NodeId>(i)).reward.mean();
}

bool BeliefState::is_revealed(NodeId id) const {
  spec_->node(id);
  return revealed_[static_cast<std::size_t>(id)] != 0;
}

std::optional<double> BeliefState::revealed(NodeId id) const {
  if (!is_revealed(id)) return std::nullopt;
  return values_[static_cast<std::size_t>(id)];
}

double BeliefState::node_expectation(NodeId id) const {
  spec_->node(id);
  return values_[static_cast<std::size_t>(id)];
}

bool BeliefState::is_valid(Computation c) const {
  if (c.is_terminate()) return true;
  const NodeId id = c.node();
  return id > kRoot && id < static_cast<NodeId>(values_.size()) && !revealed_[static_cast<std::size_t>(id)];
}

std::vector<Computation> BeliefState::valid_computations() const {
  std::vector<Computation> out;
  out.reserve(values_.size());
  out.push_back(Computation::terminate());
  for (std::size_t i = 1; i < values_.size(); ++i)
    if (!revealed_[i]) out.push_back(Computation::click(static_cast<NodeId>(i)));
  return out;
}

int BeliefState::num_valid_clicks() const { return static_cast<int>(values_.size()) - 1 - n_clicks_; }

BeliefState BeliefState::with_revealed(NodeId id, double value) const {
  if (!is_valid(Computation::click(id)))
    throw InvalidComputation("node " + std::to_string(id) + " is already revealed");
  BeliefState next = *this;
  next.values_[static_cast<std::size_t>(id)] = value;
  next.revealed_[static_cast<std::size_t>(id)] = 1;
  ++next.n_clicks_;
  return next;
}

bool operator==(const BeliefState& a, const BeliefState& b) {
  return (a.spec_ == b.spec_ || *a.spec_ == *b.spec_) && a.revealed_ == b.revealed_ && a.values_ == b.values_;
}

// -- meta-level operations ---------------------------------------------------

PathSummary summarize_paths(const BeliefState& belief) {
  const auto& spec = belief.spec();
  const auto& paths = spec.paths();
  PathSummary s;
  s.expected.resize(paths.size());
  s.max_possible.resize(paths.size());
  s.min_possible.resize(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    double e = 0.0, hi = 0.0, lo = 0.0;
    for (std::size_t i = 1; i < paths[p].size(); ++i) {
      const NodeId id = paths[p][i];
      const double v = belief.node_expectation(id);
      e += v;
      if (belief.is_revealed(id)) {
        hi += v;
        lo += v;
      } else {
        hi += spec.node(id).reward.max();
        lo += spec.node(id).reward.min();
      }
    }
    s.expected[p] = e;
    s.max_possible[p] = hi;
    s.min_possible[p] = lo;
  }
  s.greedy = 0;
  for (std::size_t p = 1; p < paths.size(); ++p)
    if (s.expected[p] > s.expected[s.greedy]) s.greedy = p;
  s.best = s.expected[s.greedy];
  return s;
}

double expected_path_value(const BeliefState& belief, std::span<const NodeId> path) {
  if (!belief.spec().is_path(path)) throw std::invalid_argument("expected_path_value: not a root-to-leaf path");
  double e = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) e += belief.node_expectation(path[i]);
  return e;
}

std::size_t greedy_path_index(const BeliefState& belief) {
  const auto& paths = belief.spec().paths();
  std::size_t best = 0;
  double best_value = expected_path_value(belief, paths[0]);
  for (std::size_t p = 1; p < paths.size(); ++p) {
    const double v = expected_path_value(belief, paths[p]);
    if (v > best_value) {
      best = p;
      best_value = v;
    }
  }
  return best;
}

const Path& greedy_path(const BeliefState& belief) { return belief.spec().paths()[greedy_path_index(belief)]; }

double best_path_value(const BeliefState& belief) { return expected_path_value(belief, greedy_path(belief)); }

double path_return(const GroundTruth& truth, std::span<const NodeId> path) {
  double r = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) r += truth.value(path[i]);
  return r;
}

std::pair<BeliefState, MetaReward> transition(const BeliefState& belief, Computation c, const GroundTruth& truth) {
  if (!belief.is_valid(c)) throw InvalidComputation(to_string(c) + " is not valid in this belief state");
  if (c.is_terminate()) return {belief, MetaReward{path_return(truth, greedy_path(belief))}};
  return {belief.with_revealed(c.node(), truth.value(c.node())), MetaReward{-belief.spec().click_cost()}};
}

bool is_one_click_successor(const BeliefState& b_t, const BeliefState& b_next) {
  if (b_next.n_clicks() != b_t.n_clicks() + 1) return false;
  if (!(b_t.spec_ptr() == b_next.spec_ptr() || b_t.spec() == b_next.spec())) return false;
  int added = 0;
  for (std::size_t i = 1; i < b_t.spec().num_nodes(); ++i) {
    const auto id = static_cast<NodeId>(i);
    const bool before = b_t.is_revealed(id);
    const bool after = b_next.is_revealed(id);
    if (before && (!after || *b_t.revealed(id) != *b_next.revealed(id))) return false;
    if (!before && after) ++added;
  }
  return added == 1;
}

double pseudo_reward(const BeliefState& b_t, const BeliefState& b_next) {
  if (!is_one_click_successor(b_t, b_next))
    throw std::invalid_argument("pseudo_reward: b_next is not a one-click successor of b_t");
  const Path& before = greedy_path(b_t);
  const Path& after = greedy_path(b_next);
  return expected_path_value(b_next, after) - expected_path_value(b_next, before);
}

}  // namespace mcrl
