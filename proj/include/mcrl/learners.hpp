#pragma once

// The four base learning mechanisms: REINFORCE (policy gradient on a linear
// softmax), LVOC (Bayesian regression of bootstrapped meta-level Q-values
// with Thompson-sampled selection), the mental-habit softmax and the fixed
// non-learning softmax.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mcrl/env.hpp"
#include "mcrl/features.hpp"
#include "mcrl/rng.hpp"

namespace mcrl {

using PolicyWeights = Eigen::VectorXd;

/// A distribution over the computations that are valid in one belief.
struct Policy {
  std::vector<Computation> options;
  std::vector<double> probs;

  double prob(Computation c) const;  // 0 for computations not in options
};

// Numerically stable softmax of values / tau. Throws on an empty input or a
// non-positive tau.
std::vector<double> softmax(std::span<const double> values, double tau);

// `values` is aligned with b.valid_computations().
Policy softmax_policy(const BeliefState& b, std::span<const double> values, double tau);

// Linear softmax over the rows of F: score_r = (F_r . w + offset_r) / tau.
std::vector<double> linear_softmax(const Eigen::MatrixXd& F, const Eigen::VectorXd& offsets,
                                   const Eigen::VectorXd& w, double tau);
// d/dw log pi(row) = (F_row - sum_r pi_r F_r) / tau.
Eigen::VectorXd grad_log_linear_softmax(const Eigen::MatrixXd& F, const Eigen::VectorXd& offsets,
                                        const Eigen::VectorXd& w, double tau, Eigen::Index row);

// --- REINFORCE --------------------------------------------------------------

// Gradient of ln pi_w(c | b) for the plain linear softmax over every valid
// computation of b.
Eigen::VectorXd reinforce_grad_logpi(const BeliefState& b, Computation c, const PolicyWeights& w, double tau,
                                     const FeatureRegistry& reg, const ClickHistory& h = {});

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// How each step's log-policy gradient is weighted inside one trial.
//   immediate:    sum_t gamma^(t-1) r_t grad_t
//   reward_to_go: sum_t gamma^(t-1) G_t grad_t, G_t = sum_{k>=t} gamma^(k-t) r_k
enum class ReturnWeighting { immediate, reward_to_go };

struct ReinforceParams {
  double alpha = 0.01;
  double gamma = 1.0;
  double tau = 1.0;
  ReturnWeighting weighting = ReturnWeighting::reward_to_go;
  AdamState adam;
};

// One decision inside a trial. grad_logpi is empty when the computation was
// not chosen by the softmax (e.g. a Stage-1 termination); the step still
// contributes its reward to later returns.
struct ReinforceStep {
  Eigen::VectorXd grad_logpi;
  double reward = 0.0;
};

Eigen::VectorXd reinforce_gradient(std::span<const ReinforceStep> steps, double gamma, ReturnWeighting weighting,
                                   Eigen::Index dim);

// Gradient ascent step through ADAM with base rate alpha; updates `adam`.
PolicyWeights adam_ascent(const PolicyWeights& w, const Eigen::VectorXd& g, double alpha, AdamState& adam);

struct TraceStep {
  BeliefState belief;
  Computation computation;
  double reward;
};

// Validates the trace (nonempty, each computation valid in its belief, last
// computation Terminate), computes the raw gradient and applies it through
// ADAM. Throws InvalidComputation on a malformed trace.
PolicyWeights reinforce_trial_update(std::span<const TraceStep> trace, ReinforceParams& params, const PolicyWeights& w,
                                     const FeatureRegistry& reg);

// Independent N(0, 0.1^2) draws.
PolicyWeights init_reinforce_weights(Eigen::Index dim, std::uint64_t seed);

// --- LVOC -------------------------------------------------------------------

struct LvocPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct LvocParams {
  Eigen::VectorXd prior_mean;
  double prior_var = 1.0;
  int n_samples = 1;
  double obs_noise_var = 1.0;
  LvocPosterior posterior;

  static LvocParams with_prior(Eigen::VectorXd prior_mean, double prior_var, int n_samples,
                               double obs_noise_var = 1.0);
};

struct MetaExperience {
  FeatureVector features;  // f(b_k, c_k)
  double target = 0.0;     // bootstrap estimate Q-hat
};

// Q-hat = r_meta + <mu, f(b', c')>; pass an empty next_features for Terminate.
double lvoc_bootstrap_target(double r_meta, const Eigen::VectorXd& mean, const FeatureVector& next_features);

// Conjugate normal update with design row e.features and target e.target.
// Throws std::invalid_argument for a non-finite target.
LvocParams lvoc_learn(const MetaExperience& e, LvocParams params);
void lvoc_learn_inplace(const MetaExperience& e, LvocParams& params);

/// Draws from N(mean, cov) via a Cholesky factor (eigen-decomposition
/// fallback for semi-definite covariances).
class GaussianSampler {
 public:
  explicit GaussianSampler(const LvocPosterior& posterior);
  Eigen::VectorXd draw(Rng& rng) const;
  // Arithmetic mean of n independent draws.
  Eigen::VectorXd draw_mean(int n, Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

struct LvocSelection {
  Computation choice = Computation::terminate();
  std::vector<Computation> options;
  std::vector<double> values;  // predicted Q per option
};

// Index of the largest value; ties go to the lowest index.
std::size_t argmax_first(std::span<const double> values);

// Samples n weight vectors, averages them and picks the argmax of the
// predicted Q-values among all valid computations of b.
LvocSelection lvoc_select(const BeliefState& b, const LvocParams& params, const FeatureRegistry& reg,
                          std::uint64_t seed, const ClickHistory& h = {});

// --- habit and non-learning -------------------------------------------------

struct HabitWeights {
  double same_node = 0.0;
  double same_branch = 0.0;
  double same_level = 0.0;
  double termination_bias = 0.0;
};

// Softmax over w_node*count(node) + w_branch*count(branch) + w_level*count(level)
// for clicks and the termination bias for Terminate.
Policy habit_policy(const BeliefState& b, const ClickHistory& h, const HabitWeights& w, double tau);

// Softmax of w . f(b, c); w never changes.
Policy nonlearning_policy(const BeliefState& b, const PolicyWeights& w, double tau, const FeatureRegistry& reg,
                          const ClickHistory& h = {});

}  // namespace mcrl
