#pragma once

// Forward simulation of agents in the condition environments, first-click
// strategy labels, and learning-curve aggregation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcrl/env.hpp"
#include "mcrl/features.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/metacontrol.hpp"
#include "mcrl/modelselect.hpp"

namespace mcrl {

enum class StrategyLabel { adaptive, non_adaptive };
std::string to_string(StrategyLabel l);

// True for conditions that have a first-click strategy rule (exp1-*).
bool has_strategy_rule(const std::string& condition);
// Zero-click trials (no first click) are non-adaptive. Throws
// std::invalid_argument for conditions without a rule.
StrategyLabel classify_strategy(std::optional<NodeId> first_click, const TrialSpec& spec, const std::string& condition);
std::optional<StrategyLabel> strategy_of(const TrialRecord& trial, const std::string& condition);

struct SimTrial {
  TrialRecord record;
  int n_clicks = 0;
  std::optional<NodeId> first_click;
  std::optional<StrategyLabel> label;  // empty when the condition has no rule
};

struct SimTrace {
  std::string agent_id;
  std::string condition;
  std::string model_id;
  std::vector<SimTrial> trials;

  ParticipantRecord to_record() const;
};

struct SimOptions {
  AgentOptions agent;
  const ConditionTable* table = nullptr;  // null: compiled-in defaults
};

// Ground truths are fresh per trial: make_condition_env(condition,
// derive_seed(seed, stream::ground_truth, t)).
SimTrace simulate_agent(const ModelConfig& config, const ParamVector& params, const FeatureRegistry& registry,
                        const std::string& condition, int n_trials, std::uint64_t seed, const std::string& agent_id = "",
                        const SimOptions& options = {});

// Cohort seed for one condition of a multi-condition run. Conditions with
// identical parameters (exp1-far, exp2-lowcost-highvariance) still get
// independent cohorts.
inline std::uint64_t condition_seed(std::uint64_t base, const std::string& condition) {
  return derive_seed(base, hash_string(condition));
}

enum class Measure { score, clicks, adaptive };
std::string to_string(Measure m);
Measure measure_from_string(const std::string& s);

struct Curve {
  std::string condition;
  std::string model_id;
  Measure measure = Measure::score;
  std::vector<double> mean;
  std::vector<double> lower;  // 2.5th percentile of the bootstrap mean
  std::vector<double> upper;  // 97.5th
  std::size_t n_agents = 0;
};

struct CurveOptions {
  int bootstrap = 1000;
  std::uint64_t seed = 0;
};

// Per-trial value of one measure for one trace.
std::vector<double> trace_series(const SimTrace& trace, Measure measure);
// Throws std::invalid_argument for an empty set or misaligned trial counts.
Curve aggregate_curves(const std::vector<SimTrace>& traces, Measure measure, const CurveOptions& options = {});

void write_curve_csv_header(std::ostream& out);
// One row per trial: condition,model,measure,trial,mean,lower,upper,n.
void write_curve_csv(std::ostream& out, const Curve& curve);

}  // namespace mcrl
