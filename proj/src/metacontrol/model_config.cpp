#include <sstream>
#include <stdexcept>

#include "mcrl/metacontrol.hpp"

namespace mcrl {

std::string to_string(BaseLearner b) {
  switch (b) {
    case BaseLearner::lvoc: return "lvoc";
    case BaseLearner::reinforce: return "reinforce";
    case BaseLearner::habit: return "habit";
    case BaseLearner::nonlearning: return "nonlearning";
  }
  return "?";
}

std::string to_string(StopRule r) {
  switch (r) {
    case StopRule::none: return "none";
    case StopRule::fixed: return "fixed";
    case StopRule::decreasing: return "decreasing";
    case StopRule::past_performance: return "pastperf";
  }
  return "?";
}

BaseLearner base_learner_from_string(const std::string& s) {
  for (auto b : {BaseLearner::lvoc, BaseLearner::reinforce, BaseLearner::habit, BaseLearner::nonlearning})
    if (to_string(b) == s) return b;
  throw std::invalid_argument("unknown base learner '" + s + "'");
}

StopRule stop_rule_from_string(const std::string& s) {
  for (auto r : {StopRule::none, StopRule::fixed, StopRule::decreasing, StopRule::past_performance})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown stopping rule '" + s + "'");
}

std::string ModelConfig::id() const {
  std::string out = to_string(base);
  if (stage1 != StopRule::none) out += "+" + to_string(stage1);
  if (pseudo_rewards) out += "+pr";
  if (termination_deliberation) out += "+td";
  return out;
}

ModelConfig ModelConfig::from_id(const std::string& id, const std::string& registry) {
  ModelConfig c;
  c.registry = registry;
  std::stringstream ss(id);
  std::string part;
  bool first = true;
  while (std::getline(ss, part, '+')) {
    if (first) {
      c.base = base_learner_from_string(part);
      first = false;
    } else if (part == "pr") {
      c.pseudo_rewards = true;
    } else if (part == "td") {
      c.termination_deliberation = true;
    } else {
      c.stage1 = stop_rule_from_string(part);
      if (c.stage1 == StopRule::none) throw std::invalid_argument("model id '" + id + "': 'none' is implicit");
    }
  }
  if (first) throw std::invalid_argument("empty model id");
  c.validate();
  if (c.id() != id) throw std::invalid_argument("model id '" + id + "' is not in canonical order (" + c.id() + ")");
  return c;
}

void ModelConfig::validate() const {
  const bool extendable = base == BaseLearner::lvoc || base == BaseLearner::reinforce;
  if (!extendable && (stage1 != StopRule::none || pseudo_rewards || termination_deliberation))
    throw std::invalid_argument(to_string(base) + " models take no extensions");
  if (stage1 != StopRule::none && termination_deliberation)
    throw std::invalid_argument("termination deliberation requires stage1 = none");
}

std::vector<ModelConfig> build_grid(const GridOptions& options) {
  std::vector<ModelConfig> grid;
  for (BaseLearner base : options.bases) {
    ModelConfig c;
    c.base = base;
    c.registry = options.registry;
    if (base == BaseLearner::habit || base == BaseLearner::nonlearning) {
      grid.push_back(c);
      continue;
    }
    for (StopRule rule : {StopRule::none, StopRule::fixed, StopRule::decreasing, StopRule::past_performance}) {
      for (bool pr : {false, true}) {
        for (bool td : {false, true}) {
          if (td && rule != StopRule::none) continue;
          c.stage1 = rule;
          c.pseudo_rewards = pr;
          c.termination_deliberation = td;
          c.validate();
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

nlohmann::ordered_json grid_manifest_record(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["id"] = config.id();
  j["base"] = to_string(config.base);
  j["stage1"] = to_string(config.stage1);
  j["pseudo_rewards"] = config.pseudo_rewards;
  j["termination_deliberation"] = config.termination_deliberation;
  j["registry"] = config.registry;
  return j;
}

double effective_meta_reward(const ModelConfig& config, double r_meta, const BeliefState& b_t,
                             const BeliefState& b_next) {
  if (!config.pseudo_rewards || b_next.n_clicks() == b_t.n_clicks()) return r_meta;
  return r_meta + pseudo_reward(b_t, b_next);
}

}  // namespace mcrl
