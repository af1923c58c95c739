#include <stdexcept>

#include "mcrl/fitkit.hpp"
#include "mcrl/modelselect.hpp"

namespace mcrl {

FitResult fit_participant(const ModelConfig& config, const ParticipantRecord& record, const FeatureRegistry& registry,
                          const FitOptions& options) {
  if (options.budget < 1) throw std::invalid_argument("budget must be at least 1");
  validate_record(record);
  ParamVector params = param_space(config, registry);

  // Every evaluation replays with the same derived seed (common random
  // numbers), so candidate comparisons are not confounded by LVOC sampling.
  const std::uint64_t eval_seed = derive_seed(options.seed, stream::evaluation, hash_string(record.participant_id),
                                              hash_string(config.id()));
  int n_obs = 0;
  auto objective = [&](const std::vector<double>& x) {
    ParamVector p = params;
    p.set_values(x);
    const LogLikelihood ll = sequence_loglik(config, p, record, registry, eval_seed, options.agent);
    n_obs = ll.n_obs;
    return ll.loglik;
  };

  SearchOptions so;
  so.budget = options.budget;
  so.seed = derive_seed(options.seed, stream::optimizer, hash_string(record.participant_id), hash_string(config.id()));
  const SearchResult sr = maximize(params.specs(), objective, so);

  FitResult r;
  r.participant_id = record.participant_id;
  r.model_id = config.id();
  r.registry = registry.version_tag();
  params.set_values(sr.best_x);
  r.params = params;
  r.loglik = sr.best_value;
  r.n_obs = n_obs;
  r.k = static_cast<int>(params.size());
  r.bic = bic(r.loglik, r.k, r.n_obs);
  r.budget = options.budget;
  r.seed = options.seed;
  r.best_so_far = sr.best_so_far;
  return r;
}

nlohmann::ordered_json fit_result_to_json(const FitResult& r) {
  nlohmann::ordered_json j;
  j["schema"] = "mcrl.fit_result/1";
  j["participant_id"] = r.participant_id;
  j["model_id"] = r.model_id;
  j["registry"] = r.registry;
  j["params"] = r.params.to_json();
  j["loglik"] = r.loglik;
  j["n_obs"] = r.n_obs;
  j["k"] = r.k;
  j["bic"] = r.bic;
  j["budget"] = r.budget;
  j["seed"] = r.seed;
  j["epsilon"] = r.epsilon;
  j["best_so_far"] = r.best_so_far;
  return j;
}

FitResult fit_result_from_json(const nlohmann::json& j, const FeatureRegistry& registry) {
  try {
    FitResult r;
    r.participant_id = j.at("participant_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.registry = j.at("registry").get<std::string>();
    const ModelConfig config = ModelConfig::from_id(r.model_id, r.registry);
    r.params = param_space(config, registry);
    r.params.assign_from_json(j.at("params"));
    r.loglik = j.at("loglik").get<double>();
    r.n_obs = j.at("n_obs").get<int>();
    r.k = j.at("k").get<int>();
    r.bic = j.at("bic").get<double>();
    r.budget = j.at("budget").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epsilon = j.value("epsilon", kProbabilityFloor);
    r.best_so_far = j.value("best_so_far", std::vector<double>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fit result: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("fit result: ") + e.what());
  }
}

}  // namespace mcrl
