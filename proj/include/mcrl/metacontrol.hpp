#pragma once

// Optional model attributes layered on top of the base learners:
// two-stage (hierarchical) meta-control with three stopping rules,
// pseudo-rewards and termination deliberation. Also the model grid and the
// per-model free-parameter spaces.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"
#include "mcrl/features.hpp"
#include "mcrl/learners.hpp"
#include "mcrl/rng.hpp"

namespace mcrl {

// 1 / (1 + exp(-x / tau)).
double tempered_sigmoid(double x, double tau);

enum class BaseLearner { lvoc, reinforce, habit, nonlearning };
enum class StopRule { none, fixed, decreasing, past_performance };

std::string to_string(BaseLearner b);
std::string to_string(StopRule r);
BaseLearner base_learner_from_string(const std::string& s);
StopRule stop_rule_from_string(const std::string& s);

struct StoppingRule {
  StopRule kind = StopRule::none;
  double eta = 0.0;  // fixed: normalized threshold; past-performance: memory noise scale
  double a = 0.0;    // decreasing: threshold exp(a) - exp(b) * clicks
  double b = 0.0;
  double tau = 1.0;

  // Past-performance memory: mean score of completed trials and their count.
  double score_mean = 0.0;
  int n_trials = 0;
  // Threshold drawn for the current trial (past-performance only).
  double threshold = 0.0;

  void record_score(double score);
  double threshold_sd() const;
  // M ~ Normal(score_mean, eta / sqrt(n_trials + 1)).
  double draw_threshold(Rng& rng);
};

// Probability of terminating in Stage 1. The past-performance rule uses
// rule.threshold. Throws std::invalid_argument for the fixed rule when
// v_max == v_min, or for StopRule::none.
double stop_probability(const StoppingRule& rule, const BeliefState& b);
double stop_probability(const StoppingRule& rule, const BeliefState& b, double best_path_value);

struct ModelConfig {
  BaseLearner base = BaseLearner::reinforce;
  StopRule stage1 = StopRule::none;
  bool pseudo_rewards = false;
  bool termination_deliberation = false;
  std::string registry = "mouselab-default@1";

  // Stable id: base[+fixed|+decreasing|+pastperf][+pr][+td].
  std::string id() const;
  static ModelConfig from_id(const std::string& id, const std::string& registry = "mouselab-default@1");
  // Throws std::invalid_argument when the attribute combination is not allowed.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GridOptions {
  std::vector<BaseLearner> bases{BaseLearner::lvoc, BaseLearner::reinforce, BaseLearner::habit,
                                 BaseLearner::nonlearning};
  std::string registry = "mouselab-default@1";
};

std::vector<ModelConfig> build_grid(const GridOptions& options = {});
nlohmann::ordered_json grid_manifest_record(const ModelConfig& config);

// r_meta + PR(b_t, b_next) when pseudo-rewards are on and the step was a
// click; r_meta otherwise.
double effective_meta_reward(const ModelConfig& config, double r_meta, const BeliefState& b_t,
                             const BeliefState& b_next);

// --- free parameters --------------------------------------------------------

enum class ParamScale { linear, log, integer };

struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  ParamScale scale = ParamScale::linear;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Named free parameters of one model with box bounds. The set is fixed by
/// the ModelConfig; size() is k in the BIC.
class ParamVector {
 public:
  ParamVector() = default;
  void add(ParamSpec spec, double value);

  std::size_t size() const { return specs_.size(); }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  const std::vector<double>& values() const { return values_; }
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
  void set(const std::string& name, double value);
  void set_values(std::vector<double> values);
  bool within_bounds() const;

  nlohmann::ordered_json to_json() const;
  // Reads values for every parameter of *this from a {name: value} object.
  void assign_from_json(const nlohmann::json& j);

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<ParamSpec> specs_;
  std::vector<double> values_;
};

// Bounded parameter space of a model, filled with the synthetic-agent
// defaults used by the simulator.
ParamVector param_space(const ModelConfig& config, const FeatureRegistry& registry);

// --- composed agent ---------------------------------------------------------

struct AgentOptions {
  int lvoc_replays = 64;  // Monte Carlo selections per LVOC choice distribution
  ReturnWeighting weighting = ReturnWeighting::reward_to_go;
};

/// One model instance (base learner + attributes + parameters) with its own
/// mutable learning state. Confined to a single worker.
class Agent {
 public:
  Agent(ModelConfig config, const ParamVector& params, const FeatureRegistry& registry, std::uint64_t seed,
        AgentOptions options = {});

  const ModelConfig& config() const { return config_; }

  void begin_trial(const TrialSpec& spec);
  // Choice distribution over b.valid_computations(). For LVOC this is a
  // Monte Carlo estimate from options.lvoc_replays Thompson selections.
  Policy distribution(const BeliefState& b);
  // Draws the next computation (a single Thompson selection for LVOC).
  Computation choose(const BeliefState& b);
  // Draws from a distribution previously returned by distribution().
  Computation sample(const Policy& policy);
  // Learns from one executed step; r_meta is the external meta-level reward.
  void observe(const BeliefState& before, Computation c, double r_meta, const BeliefState& after);
  void end_trial(double score);

  const PolicyWeights& weights() const { return weights_; }
  const LvocParams& lvoc() const { return lvoc_; }
  const ClickHistory& history() const { return history_; }
  const StoppingRule& stopping_rule() const { return stop_; }

  // Versioned learner state for checkpoint and replay comparison.
  nlohmann::ordered_json snapshot() const;

 private:
  struct Scored {
    std::vector<Computation> options;
    Eigen::MatrixXd features;
    Eigen::VectorXd offsets;
  };
  Scored score_options(const BeliefState& b, bool clicks_only, const PathSummary& paths) const;
  std::vector<double> base_distribution(const BeliefState& b, bool clicks_only, const PathSummary& paths,
                                        std::vector<Computation>& options);
  double predicted_value(const BeliefState& b) const;

  ModelConfig config_;
  AgentOptions options_;
  FeatureRegistry linear_registry_;
  Rng policy_rng_;
  Rng threshold_rng_;

  ClickHistory history_;
  PolicyWeights weights_;
  double tau_ = 1.0;
  ReinforceParams reinforce_;
  std::vector<ReinforceStep> trial_steps_;
  LvocParams lvoc_;
  HabitWeights habit_;
  StoppingRule stop_;
};

struct MetaStep {
  Computation computation = Computation::terminate();
  double log_prob = 0.0;
};

// Draws the next computation and returns it with its log-probability under
// the agent's (two-stage) choice distribution.
MetaStep meta_step(Agent& agent, const BeliefState& b);

}  // namespace mcrl
