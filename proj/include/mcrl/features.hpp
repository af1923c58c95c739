#pragma once

// Feature vectors f(b, c) consumed by the linear strategy representations
// and the habit model.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"

namespace mcrl {

using FeatureVector = Eigen::VectorXd;

/// Cumulative click counts of one participant or agent across a session,
/// keyed by structural position (node id, depth-1 ancestor, depth).
struct ClickHistory {
  std::vector<int> node;    // by node id
  std::vector<int> branch;  // by depth-1 ancestor id
  std::vector<int> level;   // by depth

  int node_count(NodeId id) const;
  int branch_count(NodeId branch_id) const;
  int level_count(int depth) const;

  // In-place form of habit_count_update.
  void record(const TrialSpec& spec, Computation c);

  friend bool operator==(const ClickHistory&, const ClickHistory&) = default;
};

// Returns h with the node, branch and level counters of a click incremented
// by one. Terminate leaves h unchanged.
ClickHistory habit_count_update(ClickHistory h, const TrialSpec& spec, Computation c);

struct FeatureContext {
  const BeliefState& belief;
  const PathSummary& paths;
  Computation computation;
  const ClickHistory& history;
  double pruning_threshold;
};

struct FeatureDef {
  std::string name;
  std::string scale;  // human-readable unit / range
  bool habitual = false;
  std::function<double(const FeatureContext&)> eval;
};

/// Ordered, named feature definitions. The order and the (name, version)
/// pair are fixed for a run; fits are only comparable within one version.
class FeatureRegistry {
 public:
  FeatureRegistry(std::string name, int version, double pruning_threshold = -5.0);

  void add(FeatureDef def);

  const std::string& name() const { return name_; }
  int version() const { return version_; }
  std::string version_tag() const;
  double pruning_threshold() const { return pruning_threshold_; }
  std::size_t size() const { return defs_.size(); }
  const FeatureDef& def(std::size_t i) const { return defs_.at(i); }
  std::vector<std::string> names() const;
  int index_of(const std::string& feature) const;  // -1 when absent

  // Copy with the habit-count features removed (used by every base learner
  // except the habit model).
  FeatureRegistry without_habitual() const;

  nlohmann::ordered_json manifest() const;

 private:
  std::string name_;
  int version_;
  double pruning_threshold_;
  std::vector<FeatureDef> defs_;
};

/// The canonical registry: intercept, termination indicator, click cost,
/// depth, leaf/immediate indicators, best expected path through the node,
/// node standard deviation, max/min possible path through the node, pruning
/// indicator, parent-revealed indicator, clicks so far, termination value and
/// the three habit counts.
const FeatureRegistry& default_registry();
// Registry named by a version tag ("mouselab-default@1"). Throws SchemaError
// for unknown tags.
const FeatureRegistry& registry_by_tag(const std::string& tag);

// Throws InvalidComputation if c is not valid in b.
FeatureVector compute_features(const BeliefState& b, Computation c, const ClickHistory& h,
                               const FeatureRegistry& reg);

// One row per computation, sharing the per-belief path summary.
Eigen::MatrixXd feature_matrix(const BeliefState& b, const std::vector<Computation>& computations,
                               const ClickHistory& h, const FeatureRegistry& reg,
                               const PathSummary& paths);
Eigen::MatrixXd feature_matrix(const BeliefState& b, const std::vector<Computation>& computations,
                               const ClickHistory& h, const FeatureRegistry& reg);

}  // namespace mcrl
