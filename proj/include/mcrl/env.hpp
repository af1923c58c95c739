#pragma once

// Mouselab-MDP planning task and its meta-level MDP.
//
// A trial is a rooted tree. Every non-root node hides a reward drawn from a
// finite discrete distribution; clicking a node reveals it at cost lambda.
// The meta-level MDP has belief states (which values are revealed), actions
// Click(node) and Terminate, reward -lambda per click and the realized return
// of the greedy path on termination.

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcrl/rng.hpp"

namespace mcrl {

using NodeId = int;
inline constexpr NodeId kRoot = 0;

// Root-to-leaf node sequence, root included.
using Path = std::vector<NodeId>;

struct RewardDistribution {
  std::vector<double> support;
  std::vector<double> probs;

  double mean() const;
  double variance() const;
  double min() const;
  double max() const;
  bool contains(double value) const;
};

struct NodeSpec {
  NodeId id = kRoot;
  std::optional<NodeId> parent;
  int depth = 0;
  RewardDistribution reward;  // empty for the root
};

/// Immutable description of one trial. Construction validates the tree and
/// the reward distributions and caches the path structure.
class TrialSpec {
 public:
  // Node ids must be 0..n-1 with node 0 the (only) root. Depths are derived
  // from the parent links; any depth supplied in `nodes` is overwritten.
  TrialSpec(std::vector<NodeSpec> nodes, double click_cost, std::string condition = {});

  std::size_t num_nodes() const { return nodes_.size(); }
  const NodeSpec& node(NodeId id) const;
  std::span<const NodeSpec> nodes() const { return nodes_; }
  double click_cost() const { return click_cost_; }
  const std::string& condition() const { return condition_; }

  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  int max_depth() const { return max_depth_; }

  // Paths in lexicographic node-id order.
  const std::vector<Path>& paths() const { return paths_; }
  // Indices into paths() of every path that visits `id`.
  const std::vector<int>& paths_through(NodeId id) const;
  // Depth-1 ancestor of a non-root node (the node itself at depth 1).
  NodeId branch_of(NodeId id) const;
  const std::vector<NodeId>& children(NodeId id) const;
  bool is_path(std::span<const NodeId> path) const;

  friend bool operator==(const TrialSpec& a, const TrialSpec& b);

 private:
  std::vector<NodeSpec> nodes_;
  double click_cost_;
  std::string condition_;
  double v_min_ = 0.0;
  double v_max_ = 0.0;
  int max_depth_ = 0;
  std::vector<std::vector<NodeId>> children_;
  std::vector<Path> paths_;
  std::vector<std::vector<int>> paths_through_;
  std::vector<NodeId> branch_;
};

using SpecPtr = std::shared_ptr<const TrialSpec>;

/// One sampled instantiation of a TrialSpec.
struct GroundTruth {
  std::vector<double> rewards;  // indexed by node id; rewards[kRoot] == 0
  std::uint64_t seed = 0;

  double value(NodeId id) const { return rewards.at(static_cast<std::size_t>(id)); }
  void validate(const TrialSpec& spec) const;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

GroundTruth sample_ground_truth(const TrialSpec& spec, std::uint64_t seed);

/// Click(node) or Terminate. Encoded as an integer code where 0 (the root
/// id, which can never be clicked) stands for Terminate.
class Computation {
 public:
  static constexpr Computation terminate() { return Computation(kRoot); }
  static Computation click(NodeId node);
  static Computation from_code(int code);

  bool is_terminate() const { return node_ == kRoot; }
  bool is_click() const { return node_ != kRoot; }
  NodeId node() const;
  int code() const { return node_; }

  friend auto operator<=>(const Computation&, const Computation&) = default;

 private:
  constexpr explicit Computation(NodeId n) : node_(n) {}
  NodeId node_;
};

std::string to_string(Computation c);

class BeliefState {
 public:
  explicit BeliefState(SpecPtr spec);

  const TrialSpec& spec() const { return *spec_; }
  const SpecPtr& spec_ptr() const { return spec_; }

  bool is_revealed(NodeId id) const;
  std::optional<double> revealed(NodeId id) const;
  int n_clicks() const { return n_clicks_; }

  // Revealed value, or the distribution mean when hidden.
  double node_expectation(NodeId id) const;

  bool is_valid(Computation c) const;
  // Terminate first, then every unrevealed non-root node in id order.
  std::vector<Computation> valid_computations() const;
  int num_valid_clicks() const;

  BeliefState with_revealed(NodeId id, double value) const;

  friend bool operator==(const BeliefState& a, const BeliefState& b);

 private:
  SpecPtr spec_;
  std::vector<double> values_;
  std::vector<unsigned char> revealed_;
  int n_clicks_ = 0;
};

struct MetaReward {
  double value = 0.0;
};

// Throws InvalidComputation for a click on the root or a revealed node.
std::pair<BeliefState, MetaReward> transition(const BeliefState& belief, Computation c,
                                              const GroundTruth& truth);

// Exact expectation of the path return under the belief. Throws
// std::invalid_argument unless `path` is root-to-leaf.
double expected_path_value(const BeliefState& belief, std::span<const NodeId> path);
double best_path_value(const BeliefState& belief);
// Argmax path; ties go to the lexicographically first path.
const Path& greedy_path(const BeliefState& belief);
std::size_t greedy_path_index(const BeliefState& belief);

// Sum of realized rewards along a root-to-leaf path.
double path_return(const GroundTruth& truth, std::span<const NodeId> path);

// Value of information gained by the click that turned b_t into b_next.
// Throws std::invalid_argument when b_next is not a one-click successor.
double pseudo_reward(const BeliefState& b_t, const BeliefState& b_next);
bool is_one_click_successor(const BeliefState& b_t, const BeliefState& b_next);

// Per-path summary of a belief, shared by best_path_value, the feature
// registry, and the stopping rules.
struct PathSummary {
  std::vector<double> expected;      // E[R(path) | b]
  std::vector<double> max_possible;  // revealed values + support maxima
  std::vector<double> min_possible;  // revealed values + support minima
  std::size_t greedy = 0;
  double best = 0.0;                 // max_path E[R(path) | b]
};

PathSummary summarize_paths(const BeliefState& belief);

// -- conditions --------------------------------------------------------------

struct ConditionParams {
  double click_cost = 1.0;
  // supports[d - 1] is the equiprobable support at depth d.
  std::vector<std::vector<double>> supports;
};

/// Condition id -> generator parameters, plus the tree shape shared by all
/// conditions. Loaded from a versioned JSON file; the compiled-in default
/// equals config/conditions.json.
class ConditionTable {
 public:
  static const ConditionTable& defaults();
  static ConditionTable from_json_text(const std::string& text);
  static ConditionTable load(const std::string& path);

  int version() const { return version_; }
  const std::vector<int>& branching() const { return branching_; }
  const ConditionParams& params(const std::string& condition) const;
  std::vector<std::string> ids() const;
  bool contains(const std::string& condition) const;
  std::string to_json_text() const;

  SpecPtr make_spec(const std::string& condition) const;

 private:
  int version_ = 1;
  std::vector<int> branching_;
  std::vector<std::pair<std::string, ConditionParams>> conditions_;
};

struct ConditionEnv {
  SpecPtr spec;
  GroundTruth truth;
};

ConditionEnv make_condition_env(const std::string& condition, std::uint64_t seed,
                                const ConditionTable& table = ConditionTable::defaults());

// Default number of trials per session.
inline constexpr int kDefaultTrials = 35;

}  // namespace mcrl
