#include <cmath>
#include <random>

#include "mcrl/error.hpp"
#include "mcrl/learners.hpp"

namespace mcrl {

Eigen::VectorXd reinforce_gradient(std::span<const ReinforceStep> steps, double gamma, ReturnWeighting weighting,
                                   Eigen::Index dim) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  const std::size_t n = steps.size();
  std::vector<double> weight(n);
  if (weighting == ReturnWeighting::immediate) {
    for (std::size_t t = 0; t < n; ++t) weight[t] = steps[t].reward;
  } else {
    double ret = 0.0;
    for (std::size_t t = n; t-- > 0;) {
      ret = steps[t].reward + gamma * ret;
      weight[t] = ret;
    }
  }
  double discount = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto& grad = steps[t].grad_logpi;
    if (grad.size() > 0) {
      if (grad.size() != dim) throw std::invalid_argument("reinforce_gradient: dimension mismatch");
      g += (discount * weight[t]) * grad;
    }
    discount *= gamma;
  }
  return g;
}

PolicyWeights adam_ascent(const PolicyWeights& w, const Eigen::VectorXd& g, double alpha, AdamState& adam) {
  if (adam.m.size() != w.size()) {
    adam.m = Eigen::VectorXd::Zero(w.size());
    adam.v = Eigen::VectorXd::Zero(w.size());
    adam.t = 0;
  }
  ++adam.t;
  adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * g;
  adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(adam.beta1, adam.t);
  const double c2 = 1.0 - std::pow(adam.beta2, adam.t);
  const Eigen::VectorXd m_hat = adam.m / c1;
  const Eigen::VectorXd v_hat = adam.v / c2;
  return w + alpha * (m_hat.array() / (v_hat.array().sqrt() + adam.eps)).matrix();
}

PolicyWeights reinforce_trial_update(std::span<const TraceStep> trace, ReinforceParams& params, const PolicyWeights& w,
                                     const FeatureRegistry& reg) {
  if (trace.empty()) throw InvalidComputation("reinforce_trial_update: empty trace");
  if (!trace.back().computation.is_terminate())
    throw InvalidComputation("reinforce_trial_update: trace must end with terminate");
  std::vector<ReinforceStep> steps;
  steps.reserve(trace.size());
  for (const auto& s : trace) {
    if (!s.belief.is_valid(s.computation))
      throw InvalidComputation("reinforce_trial_update: " + to_string(s.computation) + " invalid in its belief");
    steps.push_back({reinforce_grad_logpi(s.belief, s.computation, w, params.tau, reg), s.reward});
  }
  const Eigen::VectorXd g = reinforce_gradient(steps, params.gamma, params.weighting, w.size());
  return adam_ascent(w, g, params.alpha, params.adam);
}

PolicyWeights init_reinforce_weights(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream::init_weights));
  std::normal_distribution<double> normal(0.0, 0.1);
  PolicyWeights w(dim);
  for (Eigen::Index i = 0; i < dim; ++i) w[i] = normal(rng);
  return w;
}

}  // namespace mcrl
