#include <algorithm>
#include <cmath>

#include "mcrl/fitkit.hpp"

namespace mcrl {

LogLikelihood sequence_loglik(const ModelConfig& config, const ParamVector& params, const ParticipantRecord& record,
                              const FeatureRegistry& registry, std::uint64_t seed, AgentOptions options) {
  Agent agent(config, params, registry, seed, options);
  LogLikelihood out;
  for (std::size_t t = 0; t < record.trials.size(); ++t) {
    const TrialRecord& trial = record.trials[t];
    agent.begin_trial(*trial.spec);
    BeliefState b(trial.spec);
    const double ret = trial.path_return();
    for (std::size_t s = 0; s < trial.computations.size(); ++s) {
      const Computation c = trial.computations[s];
      if (!b.is_valid(c))
        throw CorruptRecord(static_cast<int>(t), static_cast<int>(s), to_string(c) + " is not valid in its belief");
      const Policy pol = agent.distribution(b);
      out.loglik += std::log(std::max(pol.prob(c), kProbabilityFloor));
      ++out.n_obs;
      if (c.is_terminate()) {
        // The participant's own path return stands in for the greedy return.
        agent.observe(b, c, ret, b);
        break;
      }
      const BeliefState next = b.with_revealed(c.node(), trial.truth.value(c.node()));
      agent.observe(b, c, -trial.spec->click_cost(), next);
      b = next;
    }
    agent.end_trial(trial.score);
  }
  return out;
}

}  // namespace mcrl
