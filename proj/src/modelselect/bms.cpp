#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

#include "mcrl/metacontrol.hpp"
#include "mcrl/modelselect.hpp"
#include "mcrl/parallel.hpp"

namespace mcrl {

using boost::math::digamma;

double bic(double loglik, int k, int n_obs) {
  if (n_obs < 1) throw std::invalid_argument("bic: n_obs must be at least 1");
  return k * std::log(static_cast<double>(n_obs)) - 2.0 * loglik;
}

namespace {

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

// Free energy of the random-effects model at posterior (alpha, u).
double free_energy(const Eigen::MatrixXd& L, const Eigen::MatrixXd& u, const Eigen::VectorXd& alpha, double alpha0) {
  const auto K = alpha.size();
  const double a_sum = alpha.sum();
  Eigen::VectorXd elog(K);
  for (Eigen::Index k = 0; k < K; ++k) elog[k] = digamma(alpha[k]) - digamma(a_sum);
  double f = 0.0;
  for (Eigen::Index n = 0; n < L.rows(); ++n)
    for (Eigen::Index k = 0; k < K; ++k)
      if (u(n, k) > 0.0) f += u(n, k) * (L(n, k) + elog[k] - std::log(u(n, k)));
  // KL(Dir(alpha) || Dir(alpha0))
  double kl = std::lgamma(a_sum) - std::lgamma(alpha0 * static_cast<double>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    kl += std::lgamma(alpha0) - std::lgamma(alpha[k]) + (alpha[k] - alpha0) * elog[k];
  return f - kl;
}

}  // namespace

BmsResult rfx_bms(const EvidenceMatrix& e, const BmsOptions& options) {
  const auto N = e.log_evidence.rows();
  const auto K = e.log_evidence.cols();
  if (N < 1) throw std::invalid_argument("rfx_bms: need at least one participant");
  if (K < 1) throw std::invalid_argument("rfx_bms: need at least one model");
  if (!e.log_evidence.allFinite()) throw std::invalid_argument("rfx_bms: non-finite log-evidence");

  const Eigen::MatrixXd& L = e.log_evidence;
  BmsResult res;
  res.labels = e.models;
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(K, options.alpha0);
  Eigen::MatrixXd u(N, K);
  res.converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double dsum = digamma(alpha.sum());
    Eigen::VectorXd dg(K);
    for (Eigen::Index k = 0; k < K; ++k) dg[k] = digamma(alpha[k]) - dsum;
    for (Eigen::Index n = 0; n < N; ++n) {
      const Eigen::VectorXd lu = L.row(n).transpose() + dg;
      u.row(n) = (lu.array() - log_sum_exp(lu)).exp().transpose();
    }
    const Eigen::VectorXd next = (u.colwise().sum().transpose().array() + options.alpha0).matrix();
    const double delta = (next - alpha).cwiseAbs().maxCoeff();
    alpha = next;
    res.iterations = it;
    if (delta < options.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.alpha = alpha;
  res.r = alpha / alpha.sum();
  res.mc_samples = options.mc_samples;
  res.phi = K == 1 ? Eigen::VectorXd::Ones(1) : exceedance_probabilities(alpha, options.mc_samples, options.seed);

  // Bayesian omnibus risk against the equal-frequency null.
  double f0 = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) f0 += log_sum_exp(L.row(n).transpose()) - std::log(static_cast<double>(K));
  const double f1 = free_energy(L, u, alpha, options.alpha0);
  res.bor = 1.0 / (1.0 + std::exp(std::clamp(f1 - f0, -700.0, 700.0)));
  res.pxp = res.phi * (1.0 - res.bor) + Eigen::VectorXd::Constant(K, res.bor / static_cast<double>(K));
  return res;
}

Partition partition_by(const std::vector<std::string>& model_ids, const std::string& attribute) {
  Partition p;
  auto family_of = [&](const std::string& id) -> std::string {
    if (attribute == "model") return id;
    const ModelConfig c = ModelConfig::from_id(id);
    if (attribute == "base") return to_string(c.base);
    if (attribute == "stage1") return c.stage1 == StopRule::none ? "none" : to_string(c.stage1);
    if (attribute == "pr") return c.pseudo_rewards ? "pr" : "no-pr";
    if (attribute == "td") return c.termination_deliberation ? "td" : "no-td";
    throw std::invalid_argument("unknown partition attribute " + attribute);
  };
  for (std::size_t m = 0; m < model_ids.size(); ++m) {
    const std::string f = family_of(model_ids[m]);
    const auto it = std::find(p.names.begin(), p.names.end(), f);
    if (it == p.names.end()) {
      p.names.push_back(f);
      p.members.push_back({m});
    } else {
      p.members[static_cast<std::size_t>(it - p.names.begin())].push_back(m);
    }
  }
  return p;
}

Partition partition_from_json(const nlohmann::json& j, const std::vector<std::string>& model_ids) {
  if (!j.is_object()) throw std::invalid_argument("partition must be an object of family -> model ids");
  Partition p;
  std::vector<bool> covered(model_ids.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    p.names.push_back(it.key());
    std::vector<std::size_t> members;
    for (const auto& id : it.value().get<std::vector<std::string>>()) {
      const auto pos = std::find(model_ids.begin(), model_ids.end(), id);
      if (pos == model_ids.end()) throw std::invalid_argument("partition names unknown model " + id);
      const auto idx = static_cast<std::size_t>(pos - model_ids.begin());
      covered[idx] = true;
      members.push_back(idx);
    }
    p.members.push_back(std::move(members));
  }
  for (std::size_t m = 0; m < model_ids.size(); ++m)
    if (!covered[m]) throw std::invalid_argument("partition does not cover model " + model_ids[m]);
  return p;
}

EvidenceMatrix family_evidence(const EvidenceMatrix& e, const Partition& partition) {
  if (partition.names.size() != partition.members.size()) throw std::invalid_argument("malformed partition");
  EvidenceMatrix out;
  out.participants = e.participants;
  out.models = partition.names;
  out.log_evidence.resize(e.log_evidence.rows(), static_cast<Eigen::Index>(partition.names.size()));
  for (std::size_t f = 0; f < partition.members.size(); ++f) {
    const auto& mem = partition.members[f];
    if (mem.empty()) throw std::invalid_argument("empty family " + partition.names[f]);
    for (Eigen::Index n = 0; n < e.log_evidence.rows(); ++n) {
      double mx = -std::numeric_limits<double>::infinity();
      for (auto m : mem) mx = std::max(mx, e.log_evidence(n, static_cast<Eigen::Index>(m)));
      double acc = 0.0;
      for (auto m : mem) acc += std::exp(e.log_evidence(n, static_cast<Eigen::Index>(m)) - mx);
      out.log_evidence(n, static_cast<Eigen::Index>(f)) = mx + std::log(acc / static_cast<double>(mem.size()));
    }
  }
  return out;
}

BmsResult family_bms(const EvidenceMatrix& e, const Partition& partition, const BmsOptions& options) {
  return rfx_bms(family_evidence(e, partition), options);
}

EvidenceLabel delta_bic_class(double bic_a, double bic_b) {
  const double d = bic_a - bic_b;
  if (d > kDeltaBicThreshold) return EvidenceLabel::substantial_for_b;
  if (d < -kDeltaBicThreshold) return EvidenceLabel::substantial_for_a;
  return EvidenceLabel::inconclusive;
}

std::string to_string(EvidenceLabel l) {
  switch (l) {
    case EvidenceLabel::inconclusive: return "inconclusive";
    case EvidenceLabel::substantial_for_a: return "substantial-for-a";
    case EvidenceLabel::substantial_for_b: return "substantial-for-b";
  }
  return "?";
}

}  // namespace mcrl
