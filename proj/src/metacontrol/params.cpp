#include <cmath>
#include <stdexcept>

#include "mcrl/error.hpp"
#include "mcrl/metacontrol.hpp"

namespace mcrl {

void ParamVector::add(ParamSpec spec, double value) {
  if (has(spec.name)) throw std::invalid_argument("duplicate parameter " + spec.name);
  if (!(spec.lo <= spec.hi)) throw std::invalid_argument("parameter " + spec.name + " has empty bounds");
  if (spec.scale == ParamScale::log && !(spec.lo > 0.0))
    throw std::invalid_argument("log-scaled parameter " + spec.name + " needs a positive lower bound");
  specs_.push_back(std::move(spec));
  values_.push_back(value);
}

bool ParamVector::has(const std::string& name) const {
  for (const auto& s : specs_)
    if (s.name == name) return true;
  return false;
}

double ParamVector::get(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return values_[i];
  throw std::out_of_range("no parameter named " + name);
}

void ParamVector::set(const std::string& name, double value) {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) {
      values_[i] = value;
      return;
    }
  throw std::out_of_range("no parameter named " + name);
}

void ParamVector::set_values(std::vector<double> values) {
  if (values.size() != specs_.size()) throw std::invalid_argument("parameter count mismatch");
  values_ = std::move(values);
}

bool ParamVector::within_bounds() const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (!(values_[i] >= specs_[i].lo && values_[i] <= specs_[i].hi)) return false;
    if (specs_[i].scale == ParamScale::integer && values_[i] != std::round(values_[i])) return false;
  }
  return true;
}

nlohmann::ordered_json ParamVector::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < specs_.size(); ++i) j[specs_[i].name] = values_[i];
  return j;
}

void ParamVector::assign_from_json(const nlohmann::json& j) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (!j.contains(specs_[i].name)) throw SchemaError("missing parameter " + specs_[i].name);
    values_[i] = j.at(specs_[i].name).get<double>();
  }
  if (!within_bounds()) throw SchemaError("parameters outside their bounds");
}

ParamVector param_space(const ModelConfig& config, const FeatureRegistry& registry) {
  config.validate();
  ParamVector pv;
  const FeatureRegistry linear = registry.without_habitual();
  switch (config.base) {
    case BaseLearner::reinforce:
      pv.add({"alpha", 1e-4, 1.0, ParamScale::log}, 0.02);
      pv.add({"gamma", 0.0, 1.0, ParamScale::linear}, 1.0);
      pv.add({"tau", 1e-3, 100.0, ParamScale::log}, 4.0);
      break;
    case BaseLearner::lvoc:
      for (const auto& name : linear.names()) pv.add({"prior_mean." + name, -1.0, 1.0, ParamScale::linear}, 0.0);
      pv.add({"prior_var", 1e-3, 100.0, ParamScale::log}, 1.0);
      pv.add({"n_samples", 1.0, 32.0, ParamScale::integer}, 1.0);
      break;
    case BaseLearner::habit:
      pv.add({"w_same_node", -2.0, 2.0, ParamScale::linear}, 0.6);
      pv.add({"w_same_branch", -2.0, 2.0, ParamScale::linear}, 0.1);
      pv.add({"w_same_level", -2.0, 2.0, ParamScale::linear}, 0.1);
      pv.add({"termination_bias", -10.0, 10.0, ParamScale::linear}, 1.0);
      break;
    case BaseLearner::nonlearning:
      for (const auto& name : linear.names()) pv.add({"w." + name, -2.0, 2.0, ParamScale::linear}, 0.0);
      break;
  }
  switch (config.stage1) {
    case StopRule::none:
      break;
    case StopRule::fixed:
      pv.add({"eta", 0.0, 1.0, ParamScale::linear}, 0.6);
      pv.add({"stop_tau", 1e-3, 100.0, ParamScale::log}, 0.05);
      break;
    case StopRule::decreasing:
      pv.add({"a", -3.0, 5.0, ParamScale::linear}, 3.0);
      pv.add({"b", -5.0, 3.0, ParamScale::linear}, 1.0);
      pv.add({"stop_tau", 1e-3, 100.0, ParamScale::log}, 2.0);
      break;
    case StopRule::past_performance:
      pv.add({"eta", 0.0, 50.0, ParamScale::linear}, 10.0);
      pv.add({"stop_tau", 1e-3, 100.0, ParamScale::log}, 2.0);
      break;
  }
  return pv;
}

}  // namespace mcrl
