#include "mcrl/env_json.hpp"

#include <cmath>

#include "mcrl/error.hpp"

namespace mcrl {

namespace {
constexpr const char* kSpecSchema = "mcrl.trial_spec/1";
constexpr const char* kTruthSchema = "mcrl.ground_truth/1";

void check_schema(const nlohmann::json& j, const char* expected) {
  if (j.contains("schema") && j.at("schema").get<std::string>() != expected)
    throw SchemaError(std::string("expected schema ") + expected);
}
}  // namespace

nlohmann::ordered_json spec_to_json(const TrialSpec& spec) {
  nlohmann::ordered_json j;
  j["schema"] = kSpecSchema;
  j["condition"] = spec.condition();
  j["click_cost"] = spec.click_cost();
  j["v_min"] = spec.v_min();
  j["v_max"] = spec.v_max();
  auto& nodes = j["nodes"];
  nodes = nlohmann::ordered_json::array();
  for (const auto& n : spec.nodes()) {
    nlohmann::ordered_json jn;
    jn["id"] = n.id;
    jn["parent"] = n.parent ? nlohmann::ordered_json(*n.parent) : nlohmann::ordered_json(nullptr);
    if (n.parent) {
      jn["support"] = n.reward.support;
      jn["probs"] = n.reward.probs;
    }
    nodes.push_back(std::move(jn));
  }
  return j;
}

SpecPtr spec_from_json(const nlohmann::json& j) {
  try {
    check_schema(j, kSpecSchema);
    std::vector<NodeSpec> nodes;
    for (const auto& jn : j.at("nodes")) {
      NodeSpec n;
      n.id = jn.at("id").get<NodeId>();
      if (!jn.at("parent").is_null()) {
        n.parent = jn.at("parent").get<NodeId>();
        n.reward.support = jn.at("support").get<std::vector<double>>();
        n.reward.probs = jn.at("probs").get<std::vector<double>>();
      }
      nodes.push_back(std::move(n));
    }
    auto spec = std::make_shared<const TrialSpec>(std::move(nodes), j.at("click_cost").get<double>(),
                                                  j.value("condition", std::string{}));
    if (j.contains("v_min") && std::abs(j.at("v_min").get<double>() - spec->v_min()) > 1e-9)
      throw SchemaError("v_min does not match the node distributions");
    if (j.contains("v_max") && std::abs(j.at("v_max").get<double>() - spec->v_max()) > 1e-9)
      throw SchemaError("v_max does not match the node distributions");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("trial spec: ") + e.what());
  }
}

nlohmann::ordered_json truth_to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["schema"] = kTruthSchema;
  j["seed"] = truth.seed;
  j["rewards"] = truth.rewards;
  return j;
}

GroundTruth truth_from_json(const nlohmann::json& j, const TrialSpec& spec) {
  try {
    check_schema(j, kTruthSchema);
    GroundTruth t;
    t.seed = j.value("seed", std::uint64_t{0});
    t.rewards = j.at("rewards").get<std::vector<double>>();
    t.validate(spec);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("ground truth: ") + e.what());
  }
}

nlohmann::ordered_json env_to_json(const ConditionEnv& env) {
  nlohmann::ordered_json j;
  j["spec"] = spec_to_json(*env.spec);
  j["truth"] = truth_to_json(env.truth);
  return j;
}

ConditionEnv env_from_json(const nlohmann::json& j) {
  ConditionEnv env;
  env.spec = spec_from_json(j.at("spec"));
  env.truth = truth_from_json(j.at("truth"), *env.spec);
  return env;
}

}  // namespace mcrl
