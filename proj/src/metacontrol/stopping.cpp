#include <cmath>
#include <random>
#include <stdexcept>

#include "mcrl/metacontrol.hpp"

namespace mcrl {

double tempered_sigmoid(double x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tempered sigmoid temperature must be positive");
  const double z = x / tau;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void StoppingRule::record_score(double score) {
  ++n_trials;
  score_mean += (score - score_mean) / n_trials;
}

double StoppingRule::threshold_sd() const { return eta / std::sqrt(static_cast<double>(n_trials) + 1.0); }

double StoppingRule::draw_threshold(Rng& rng) {
  const double sd = threshold_sd();
  if (sd > 0.0) {
    std::normal_distribution<double> normal(score_mean, sd);
    threshold = normal(rng);
  } else {
    threshold = score_mean;
  }
  return threshold;
}

double stop_probability(const StoppingRule& rule, const BeliefState& b, double best) {
  switch (rule.kind) {
    case StopRule::fixed: {
      const auto& spec = b.spec();
      if (!(spec.v_max() > spec.v_min())) throw std::invalid_argument("fixed stopping rule needs v_max > v_min");
      return tempered_sigmoid((best - spec.v_min()) / (spec.v_max() - spec.v_min()) - rule.eta, rule.tau);
    }
    case StopRule::decreasing:
      return tempered_sigmoid(best - std::exp(rule.a) + std::exp(rule.b) * b.n_clicks(), rule.tau);
    case StopRule::past_performance:
      return tempered_sigmoid(best - rule.threshold, rule.tau);
    case StopRule::none:
      break;
  }
  throw std::invalid_argument("stop_probability: model has no stopping rule");
}

double stop_probability(const StoppingRule& rule, const BeliefState& b) {
  return stop_probability(rule, b, best_path_value(b));
}

}  // namespace mcrl
