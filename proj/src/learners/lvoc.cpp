#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mcrl/learners.hpp"

namespace mcrl {

LvocParams LvocParams::with_prior(Eigen::VectorXd prior_mean, double prior_var, int n_samples, double obs_noise_var) {
  if (!(prior_var >= 0.0)) throw std::invalid_argument("LVOC prior variance must be non-negative");
  if (n_samples < 1) throw std::invalid_argument("LVOC needs at least one posterior sample");
  if (!(obs_noise_var > 0.0)) throw std::invalid_argument("LVOC observation noise must be positive");
  LvocParams p;
  p.prior_var = prior_var;
  p.n_samples = n_samples;
  p.obs_noise_var = obs_noise_var;
  p.posterior.mean = prior_mean;
  p.posterior.cov = Eigen::MatrixXd::Identity(prior_mean.size(), prior_mean.size()) * prior_var;
  p.prior_mean = std::move(prior_mean);
  return p;
}

double lvoc_bootstrap_target(double r_meta, const Eigen::VectorXd& mean, const FeatureVector& next_features) {
  if (next_features.size() == 0) return r_meta;
  return r_meta + mean.dot(next_features);
}

void lvoc_learn_inplace(const MetaExperience& e, LvocParams& params) {
  if (!std::isfinite(e.target)) throw std::invalid_argument("LVOC target must be finite");
  auto& post = params.posterior;
  const Eigen::VectorXd sf = post.cov * e.features;
  const double s = params.obs_noise_var + e.features.dot(sf);
  const Eigen::VectorXd gain = sf / s;
  post.mean += gain * (e.target - e.features.dot(post.mean));
  post.cov -= gain * sf.transpose();
  post.cov = 0.5 * (post.cov + post.cov.transpose());
}

LvocParams lvoc_learn(const MetaExperience& e, LvocParams params) {
  lvoc_learn_inplace(e, params);
  return params;
}

GaussianSampler::GaussianSampler(const LvocPosterior& posterior) : mean_(posterior.mean) {
  Eigen::LLT<Eigen::MatrixXd> llt(posterior.cov);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(posterior.cov);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = eig.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd GaussianSampler::draw(Rng& rng) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean_ + factor_ * z;
}

Eigen::VectorXd GaussianSampler::draw_mean(int n, Rng& rng) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(mean_.size());
  for (int i = 0; i < n; ++i) acc += draw(rng);
  return acc / static_cast<double>(n);
}

std::size_t argmax_first(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax over an empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

LvocSelection lvoc_select(const BeliefState& b, const LvocParams& params, const FeatureRegistry& reg,
                          std::uint64_t seed, const ClickHistory& h) {
  LvocSelection sel;
  sel.options = b.valid_computations();
  const Eigen::MatrixXd F = feature_matrix(b, sel.options, h, reg);
  Rng rng(derive_seed(seed, stream::policy));
  const Eigen::VectorXd w = GaussianSampler(params.posterior).draw_mean(params.n_samples, rng);
  const Eigen::VectorXd q = F * w;
  sel.values.assign(q.data(), q.data() + q.size());
  sel.choice = sel.options[argmax_first(sel.values)];
  return sel;
}

}  // namespace mcrl
