#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrl/error.hpp"
#include "mcrl/learners.hpp"

namespace mcrl {

double Policy::prob(Computation c) const {
  for (std::size_t i = 0; i < options.size(); ++i)
    if (options[i] == c) return probs[i];
  return 0.0;
}

std::vector<double> softmax(std::span<const double> values, double tau) {
  if (values.empty()) throw std::invalid_argument("softmax over an empty action set");
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> p(values.size());
  double z = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    p[i] = std::exp((values[i] - top) / tau);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

Policy softmax_policy(const BeliefState& b, std::span<const double> values, double tau) {
  Policy pol;
  pol.options = b.valid_computations();
  if (values.size() != pol.options.size())
    throw std::invalid_argument("softmax_policy: one value per valid computation required");
  pol.probs = softmax(values, tau);
  return pol;
}

std::vector<double> linear_softmax(const Eigen::MatrixXd& F, const Eigen::VectorXd& offsets, const Eigen::VectorXd& w,
                                   double tau) {
  const Eigen::VectorXd scores = F * w + offsets;
  return softmax(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), tau);
}

Eigen::VectorXd grad_log_linear_softmax(const Eigen::MatrixXd& F, const Eigen::VectorXd& offsets,
                                        const Eigen::VectorXd& w, double tau, Eigen::Index row) {
  const auto p = linear_softmax(F, offsets, w, tau);
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
  return (F.row(row).transpose() - F.transpose() * pv) / tau;
}

Eigen::VectorXd reinforce_grad_logpi(const BeliefState& b, Computation c, const PolicyWeights& w, double tau,
                                     const FeatureRegistry& reg, const ClickHistory& h) {
  const auto options = b.valid_computations();
  const auto it = std::find(options.begin(), options.end(), c);
  if (it == options.end()) throw InvalidComputation(to_string(c) + " is not valid in this belief state");
  const Eigen::MatrixXd F = feature_matrix(b, options, h, reg);
  return grad_log_linear_softmax(F, Eigen::VectorXd::Zero(F.rows()), w, tau, it - options.begin());
}

Policy nonlearning_policy(const BeliefState& b, const PolicyWeights& w, double tau, const FeatureRegistry& reg,
                          const ClickHistory& h) {
  Policy pol;
  pol.options = b.valid_computations();
  const Eigen::MatrixXd F = feature_matrix(b, pol.options, h, reg);
  pol.probs = linear_softmax(F, Eigen::VectorXd::Zero(F.rows()), w, tau);
  return pol;
}

}  // namespace mcrl
