#pragma once

// JSON encoding of trial specs and ground truths.
//
//   trial spec:   {"schema": "mcrl.trial_spec/1", "condition": "exp1-far",
//                  "click_cost": 1, "v_min": -60, "v_max": 60,
//                  "nodes": [{"id": 0, "parent": null},
//                            {"id": 1, "parent": 0, "support": [...], "probs": [...]}, ...]}
//   ground truth: {"schema": "mcrl.ground_truth/1", "seed": 7, "rewards": [0, 4, -8, ...]}
//
// v_min / v_max are derived and checked on input when present.

#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"

namespace mcrl {

nlohmann::ordered_json spec_to_json(const TrialSpec& spec);
SpecPtr spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j, const TrialSpec& spec);

// {"spec": ..., "truth": ...}, the unit written by gen-env.
nlohmann::ordered_json env_to_json(const ConditionEnv& env);
ConditionEnv env_from_json(const nlohmann::json& j);

}  // namespace mcrl
