#include "mcrl/learners.hpp"

namespace mcrl {

Policy habit_policy(const BeliefState& b, const ClickHistory& h, const HabitWeights& w, double tau) {
  Policy pol;
  pol.options = b.valid_computations();
  std::vector<double> values;
  values.reserve(pol.options.size());
  const auto& spec = b.spec();
  for (Computation c : pol.options) {
    if (c.is_terminate()) {
      values.push_back(w.termination_bias);
      continue;
    }
    const NodeId id = c.node();
    values.push_back(w.same_node * h.node_count(id) + w.same_branch * h.branch_count(spec.branch_of(id)) +
                     w.same_level * h.level_count(spec.node(id).depth));
  }
  pol.probs = softmax(values, tau);
  return pol;
}

}  // namespace mcrl
