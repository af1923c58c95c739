#pragma once

// Independent reference computations. Nothing here calls the routine it
// checks; the learner code only supplies inputs (feature rows, beliefs).

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mcrl/env.hpp"
#include "mcrl/features.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/learners.hpp"
#include "mcrl/rng.hpp"

namespace mcrl::oracle {

// ln softmax(F w / tau)[row], by log-sum-exp.
inline double log_softmax_prob(const Eigen::MatrixXd& F, const Eigen::VectorXd& w, double tau, Eigen::Index row) {
  const Eigen::VectorXd s = (F * w) / tau;
  const double m = s.maxCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) z += std::exp(s[i] - m);
  return s[row] - m - std::log(z);
}

struct GradientCheck {
  int instances = 0;
  double max_rel_error = 0.0;
};

// reinforce_grad_logpi against central differences (h = 1e-6) on random
// (belief, computation, weights, tau) drawn over every condition.
inline GradientCheck gradient_oracle(int instances, std::uint64_t seed) {
  const auto& table = ConditionTable::defaults();
  const auto ids = table.ids();
  const FeatureRegistry reg = default_registry().without_habitual();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 0.05);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradientCheck out;
  constexpr double h = 1e-6;
  for (int i = 0; i < instances; ++i) {
    const auto env = make_condition_env(ids[static_cast<std::size_t>(i) % ids.size()], rng());
    BeliefState b(env.spec);
    const int reveals = static_cast<int>(unit(rng) * 8);
    for (int k = 0; k < reveals; ++k) {
      const auto valid = b.valid_computations();
      const Computation c = valid[1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(valid.size() - 1))];
      b = b.with_revealed(c.node(), env.truth.value(c.node()));
    }
    const auto options = b.valid_computations();
    const auto row = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(options.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(reg.size()));
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = normal(rng);
    const double tau = 0.5 + 4.5 * unit(rng);

    const Eigen::MatrixXd F = feature_matrix(b, options, {}, reg);
    const Eigen::VectorXd g = reinforce_grad_logpi(b, options[static_cast<std::size_t>(row)], w, tau, reg);
    Eigen::VectorXd fd(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      Eigen::VectorXd wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      fd[k] = (log_softmax_prob(F, wp, tau, row) - log_softmax_prob(F, wm, tau, row)) / (2 * h);
    }
    const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-8);
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.instances;
  }
  return out;
}

// Closed-form Bayesian linear regression posterior from scratch.
inline LvocPosterior batch_posterior(const Eigen::VectorXd& prior_mean, double prior_var, double noise_var,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index d = prior_mean.size();
  const Eigen::MatrixXd precision =
      Eigen::MatrixXd::Identity(d, d) / prior_var + X.transpose() * X / noise_var;
  LvocPosterior p;
  p.cov = precision.inverse();
  p.mean = p.cov * (prior_mean / prior_var + X.transpose() * y / noise_var);
  return p;
}

// Largest elementwise gap between sequential lvoc_learn and the batch
// posterior over `sets` random experience sets.
inline double lvoc_conjugacy_oracle(int sets, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 40);
  double worst = 0.0;
  for (int s = 0; s < sets; ++s) {
    const Eigen::Index d = 3 + s % 12;
    const int n = len(rng);
    Eigen::VectorXd mu0(d);
    for (Eigen::Index k = 0; k < d; ++k) mu0[k] = normal(rng);
    const double prior_var = 0.2 + 3.0 * std::abs(normal(rng));
    const double noise = 0.5 + std::abs(normal(rng));
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) X(i, k) = normal(rng);
      y[i] = 5.0 * normal(rng);
    }
    LvocParams p = LvocParams::with_prior(mu0, prior_var, 1, noise);
    for (int i = 0; i < n; ++i) p = lvoc_learn({X.row(i).transpose(), y[i]}, p);
    const LvocPosterior ref = batch_posterior(mu0, prior_var, noise, X, y);
    worst = std::max(worst, (p.posterior.mean - ref.mean).cwiseAbs().maxCoeff());
    worst = std::max(worst, (p.posterior.cov - ref.cov).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Mann-Kendall S by all pairwise sign comparisons.
inline long long mk_s(const std::vector<double>& x) {
  long long s = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) s += (x[j] > x[i]) - (x[j] < x[i]);
  return s;
}

// Hand-enumerated log-likelihoods on the depth-1, two-leaf task (root with
// leaves 1 and 2). Every trial is a list of node codes ending in 0. Each
// decision probability is floored at `floor` before the log.

// Non-learning model whose only nonzero weights are on is_termination (a),
// clicks_so_far (k), depth (d) and click_cost (c): terminate scores
// a + k * clicks, each hidden leaf scores d * 1 + c * lambda.
inline double two_leaf_nonlearning_loglik(const std::vector<std::vector<int>>& trials, double a, double k, double d,
                                          double c, double lambda, double floor = kProbabilityFloor) {
  double ll = 0.0;
  for (const auto& t : trials) {
    int clicks = 0;
    for (int code : t) {
      const int hidden = 2 - clicks;
      if (hidden == 0) break;  // forced terminate, ln 1
      const double st = std::exp(a + k * clicks);
      const double sc = std::exp(d + c * lambda);
      const double z = st + hidden * sc;
      ll += std::log(std::max(code == 0 ? st / z : sc / z, floor));
      if (code == 0) break;
      ++clicks;
    }
  }
  return ll;
}

// Habit model: leaf i scores (w_node + w_branch) * n_i + w_level * n_total
// (each leaf is its own branch at depth 1), terminate scores the bias; tau 1.
inline double two_leaf_habit_loglik(const std::vector<std::vector<int>>& trials, double w_node, double w_branch,
                                    double w_level, double bias, double floor = kProbabilityFloor) {
  double ll = 0.0;
  int n[3] = {0, 0, 0};
  for (const auto& t : trials) {
    bool revealed[3] = {true, false, false};
    for (int code : t) {
      if (revealed[1] && revealed[2]) break;
      double z = std::exp(bias);
      double chosen = code == 0 ? std::exp(bias) : 0.0;
      for (int leaf = 1; leaf <= 2; ++leaf) {
        if (revealed[leaf]) continue;
        const double e = std::exp((w_node + w_branch) * n[leaf] + w_level * (n[1] + n[2]));
        z += e;
        if (code == leaf) chosen = e;
      }
      ll += std::log(std::max(chosen / z, floor));
      if (code == 0) break;
      revealed[code] = true;
      ++n[code];
    }
  }
  return ll;
}

}  // namespace mcrl::oracle
