#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrl/error.hpp"
#include "mcrl/metacontrol.hpp"

namespace mcrl {

namespace {

std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the cumulative total; return the last option with mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Agent::Agent(ModelConfig config, const ParamVector& params, const FeatureRegistry& registry, std::uint64_t seed,
             AgentOptions options)
    : config_(std::move(config)),
      options_(options),
      linear_registry_(registry.without_habitual()),
      policy_rng_(derive_seed(seed, stream::policy)),
      threshold_rng_(derive_seed(seed, stream::threshold)) {
  config_.validate();
  if (config_.registry != registry.version_tag())
    throw std::invalid_argument("model " + config_.id() + " expects registry " + config_.registry + ", got " +
                                registry.version_tag());
  const auto dim = static_cast<Eigen::Index>(linear_registry_.size());
  switch (config_.base) {
    case BaseLearner::reinforce:
      reinforce_.alpha = params.get("alpha");
      reinforce_.gamma = params.get("gamma");
      reinforce_.tau = params.get("tau");
      reinforce_.weighting = options_.weighting;
      tau_ = reinforce_.tau;
      weights_ = init_reinforce_weights(dim, seed);
      break;
    case BaseLearner::lvoc: {
      Eigen::VectorXd mu(dim);
      for (Eigen::Index i = 0; i < dim; ++i)
        mu[i] = params.get("prior_mean." + linear_registry_.def(static_cast<std::size_t>(i)).name);
      lvoc_ = LvocParams::with_prior(mu, params.get("prior_var"), static_cast<int>(std::lround(params.get("n_samples"))));
      break;
    }
    case BaseLearner::habit:
      habit_.same_node = params.get("w_same_node");
      habit_.same_branch = params.get("w_same_branch");
      habit_.same_level = params.get("w_same_level");
      habit_.termination_bias = params.get("termination_bias");
      break;
    case BaseLearner::nonlearning:
      weights_.resize(dim);
      for (Eigen::Index i = 0; i < dim; ++i)
        weights_[i] = params.get("w." + linear_registry_.def(static_cast<std::size_t>(i)).name);
      break;
  }
  stop_.kind = config_.stage1;
  switch (config_.stage1) {
    case StopRule::none:
      break;
    case StopRule::fixed:
    case StopRule::past_performance:
      stop_.eta = params.get("eta");
      stop_.tau = params.get("stop_tau");
      break;
    case StopRule::decreasing:
      stop_.a = params.get("a");
      stop_.b = params.get("b");
      stop_.tau = params.get("stop_tau");
      break;
  }
}

void Agent::begin_trial(const TrialSpec&) {
  trial_steps_.clear();
  if (stop_.kind == StopRule::past_performance) stop_.draw_threshold(threshold_rng_);
}

Agent::Scored Agent::score_options(const BeliefState& b, bool clicks_only, const PathSummary& paths) const {
  Scored s;
  s.options = b.valid_computations();
  if (clicks_only) s.options.erase(s.options.begin());
  s.features = feature_matrix(b, s.options, history_, linear_registry_, paths);
  s.offsets = Eigen::VectorXd::Zero(s.features.rows());
  if (!clicks_only && config_.termination_deliberation) {
    // Terminate is valued by the computed value of acting now, not by weights.
    s.features.row(0).setZero();
    s.offsets[0] = paths.best;
  }
  return s;
}

std::vector<double> Agent::base_distribution(const BeliefState& b, bool clicks_only, const PathSummary& paths,
                                             std::vector<Computation>& options) {
  if (config_.base == BaseLearner::habit) {
    Policy pol = habit_policy(b, history_, habit_, 1.0);
    options = std::move(pol.options);
    return pol.probs;
  }
  Scored s = score_options(b, clicks_only, paths);
  options = std::move(s.options);
  switch (config_.base) {
    case BaseLearner::reinforce:
      return linear_softmax(s.features, s.offsets, weights_, tau_);
    case BaseLearner::nonlearning:
      return linear_softmax(s.features, s.offsets, weights_, 1.0);
    case BaseLearner::lvoc: {
      const GaussianSampler sampler(lvoc_.posterior);
      std::vector<double> counts(options.size(), 0.0);
      for (int k = 0; k < options_.lvoc_replays; ++k) {
        const Eigen::VectorXd q = s.features * sampler.draw_mean(lvoc_.n_samples, policy_rng_) + s.offsets;
        counts[argmax_first(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())))] += 1.0;
      }
      for (double& c : counts) c /= options_.lvoc_replays;
      return counts;
    }
    case BaseLearner::habit:
      break;
  }
  throw std::logic_error("unreachable");
}

Policy Agent::distribution(const BeliefState& b) {
  Policy pol;
  if (b.num_valid_clicks() == 0) {
    pol.options = {Computation::terminate()};
    pol.probs = {1.0};
    return pol;
  }
  const PathSummary paths = summarize_paths(b);
  if (config_.stage1 == StopRule::none) {
    pol.probs = base_distribution(b, false, paths, pol.options);
    return pol;
  }
  const double p_stop = stop_probability(stop_, b, paths.best);
  std::vector<Computation> clicks;
  const auto q = base_distribution(b, true, paths, clicks);
  pol.options.push_back(Computation::terminate());
  pol.probs.push_back(p_stop);
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    pol.options.push_back(clicks[i]);
    pol.probs.push_back((1.0 - p_stop) * q[i]);
  }
  return pol;
}

Computation Agent::choose(const BeliefState& b) {
  if (b.num_valid_clicks() == 0) return Computation::terminate();
  const PathSummary paths = summarize_paths(b);
  bool clicks_only = false;
  if (config_.stage1 != StopRule::none) {
    std::bernoulli_distribution stop(stop_probability(stop_, b, paths.best));
    if (stop(policy_rng_)) return Computation::terminate();
    clicks_only = true;
  }
  if (config_.base == BaseLearner::lvoc) {
    const Scored s = score_options(b, clicks_only, paths);
    const Eigen::VectorXd q =
        s.features * GaussianSampler(lvoc_.posterior).draw_mean(lvoc_.n_samples, policy_rng_) + s.offsets;
    return s.options[argmax_first(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())))];
  }
  std::vector<Computation> options;
  const auto probs = base_distribution(b, clicks_only, paths, options);
  return options[sample_index(probs, policy_rng_)];
}

Computation Agent::sample(const Policy& policy) { return policy.options[sample_index(policy.probs, policy_rng_)]; }

double Agent::predicted_value(const BeliefState& b) const {
  const PathSummary paths = summarize_paths(b);
  const Scored s = score_options(b, false, paths);
  const Eigen::VectorXd q = s.features * lvoc_.posterior.mean + s.offsets;
  return q.maxCoeff();
}

void Agent::observe(const BeliefState& before, Computation c, double r_meta, const BeliefState& after) {
  if (!before.is_valid(c)) throw InvalidComputation(to_string(c) + " is not valid in this belief state");
  const double reward = effective_meta_reward(config_, r_meta, before, after);

  if (config_.base == BaseLearner::reinforce) {
    ReinforceStep step;
    step.reward = reward;
    const bool chosen_by_policy = config_.stage1 == StopRule::none || c.is_click();
    if (chosen_by_policy && before.num_valid_clicks() > 0) {
      const bool clicks_only = config_.stage1 != StopRule::none;
      const Scored s = score_options(before, clicks_only, summarize_paths(before));
      const auto row = std::find(s.options.begin(), s.options.end(), c) - s.options.begin();
      step.grad_logpi = grad_log_linear_softmax(s.features, s.offsets, weights_, tau_, row);
    }
    trial_steps_.push_back(std::move(step));
  } else if (config_.base == BaseLearner::lvoc && !(c.is_terminate() && config_.termination_deliberation)) {
    MetaExperience e;
    e.features = compute_features(before, c, history_, linear_registry_);
    e.target = c.is_terminate() ? reward : reward + predicted_value(after);
    lvoc_learn_inplace(e, lvoc_);
  }
  history_.record(before.spec(), c);
}

void Agent::end_trial(double score) {
  if (config_.base == BaseLearner::reinforce && !trial_steps_.empty()) {
    const Eigen::VectorXd g = reinforce_gradient(trial_steps_, reinforce_.gamma, reinforce_.weighting, weights_.size());
    weights_ = adam_ascent(weights_, g, reinforce_.alpha, reinforce_.adam);
  }
  trial_steps_.clear();
  if (stop_.kind == StopRule::past_performance) stop_.record_score(score);
}

nlohmann::ordered_json Agent::snapshot() const {
  nlohmann::ordered_json j;
  j["schema"] = "mcrl.learner_state/1";
  j["model"] = config_.id();
  j["registry"] = config_.registry;
  switch (config_.base) {
    case BaseLearner::reinforce:
      j["weights"] = to_vector(weights_);
      j["adam"] = {{"t", reinforce_.adam.t}, {"m", to_vector(reinforce_.adam.m)}, {"v", to_vector(reinforce_.adam.v)}};
      break;
    case BaseLearner::nonlearning:
      j["weights"] = to_vector(weights_);
      break;
    case BaseLearner::lvoc: {
      j["posterior_mean"] = to_vector(lvoc_.posterior.mean);
      const Eigen::MatrixXd& cov = lvoc_.posterior.cov;
      std::vector<double> flat(cov.data(), cov.data() + cov.size());
      j["posterior_cov"] = flat;
      break;
    }
    case BaseLearner::habit:
      j["habit_weights"] = {habit_.same_node, habit_.same_branch, habit_.same_level, habit_.termination_bias};
      break;
  }
  j["habit_counts"] = {{"node", history_.node}, {"branch", history_.branch}, {"level", history_.level}};
  if (stop_.kind != StopRule::none)
    j["stopping"] = {{"rule", to_string(stop_.kind)}, {"score_mean", stop_.score_mean}, {"n_trials", stop_.n_trials}};
  return j;
}

MetaStep meta_step(Agent& agent, const BeliefState& b) {
  const Policy pol = agent.distribution(b);
  MetaStep step;
  step.computation = agent.sample(pol);
  step.log_prob = std::log(pol.prob(step.computation));
  return step;
}

}  // namespace mcrl
