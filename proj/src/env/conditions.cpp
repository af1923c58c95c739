#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"
#include "mcrl/error.hpp"

namespace mcrl {

namespace {

// Keep in sync with config/conditions.json (a test compares the two).
constexpr const char* kDefaultTable = R"({
  "version": 1,
  "tree": {"branching": [3, 1, 2]},
  "conditions": {
    "exp1-far":       {"click_cost": 1, "supports": [[-4, -2, 2, 4], [-8, -4, 4, 8], [-48, -24, 24, 48]]},
    "exp1-near":      {"click_cost": 1, "supports": [[-48, -24, 24, 48], [-8, -4, 4, 8], [-4, -2, 2, 4]]},
    "exp1-bestfirst": {"click_cost": 1, "supports": [[-10, -5, 5, 10], [-10, -5, 5, 10], [-10, -5, 5, 10]]},
    "exp2-lowcost-lowvariance":   {"click_cost": 1, "supports": [[-4, -2, 2, 4], [-8, -4, 4, 8], [-12, -6, 6, 12]]},
    "exp2-lowcost-highvariance":  {"click_cost": 1, "supports": [[-4, -2, 2, 4], [-8, -4, 4, 8], [-48, -24, 24, 48]]},
    "exp2-highcost-lowvariance":  {"click_cost": 5, "supports": [[-4, -2, 2, 4], [-8, -4, 4, 8], [-12, -6, 6, 12]]},
    "exp2-highcost-highvariance": {"click_cost": 5, "supports": [[-4, -2, 2, 4], [-8, -4, 4, 8], [-48, -24, 24, 48]]}
  }
})";

}  // namespace

const ConditionTable& ConditionTable::defaults() {
  static const ConditionTable table = from_json_text(kDefaultTable);
  return table;
}

ConditionTable ConditionTable::from_json_text(const std::string& text) {
  ConditionTable t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.version_ = j.at("version").get<int>();
    t.branching_ = j.at("tree").at("branching").get<std::vector<int>>();
    if (t.branching_.empty()) throw SchemaError("condition table: empty branching");
    for (int b : t.branching_)
      if (b < 1) throw SchemaError("condition table: branching factors must be positive");
    for (const auto& [id, c] : j.at("conditions").items()) {
      ConditionParams p;
      p.click_cost = c.at("click_cost").get<double>();
      p.supports = c.at("supports").get<std::vector<std::vector<double>>>();
      if (p.supports.size() != t.branching_.size())
        throw SchemaError("condition " + id + ": need one support per depth");
      for (const auto& s : p.supports)
        if (s.empty()) throw SchemaError("condition " + id + ": empty support");
      t.conditions_.emplace_back(id, std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("condition table: ") + e.what());
  }
  return t;
}

ConditionTable ConditionTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open condition table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const ConditionParams& ConditionTable::params(const std::string& condition) const {
  for (const auto& [id, p] : conditions_)
    if (id == condition) return p;
  throw Error("unknown condition id '" + condition + "'");
}

bool ConditionTable::contains(const std::string& condition) const {
  for (const auto& [id, p] : conditions_)
    if (id == condition) return true;
  return false;
}

std::vector<std::string> ConditionTable::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, p] : conditions_) out.push_back(id);
  return out;
}

std::string ConditionTable::to_json_text() const {
  nlohmann::ordered_json j;
  j["version"] = version_;
  j["tree"]["branching"] = branching_;
  auto& cs = j["conditions"];
  cs = nlohmann::ordered_json::object();
  for (const auto& [id, p] : conditions_) cs[id] = {{"click_cost", p.click_cost}, {"supports", p.supports}};
  return j.dump(2);
}

SpecPtr ConditionTable::make_spec(const std::string& condition) const {
  const auto& p = params(condition);
  std::vector<NodeSpec> nodes;
  nodes.push_back(NodeSpec{kRoot, std::nullopt, 0, {}});
  // Preorder numbering: each depth-1 node is followed by its whole subtree.
  auto grow = [&](auto&& self, NodeId parent, std::size_t depth) -> void {
    if (depth > branching_.size()) return;
    const auto& support = p.supports[depth - 1];
    for (int k = 0; k < branching_[depth - 1]; ++k) {
      NodeSpec n;
      n.id = static_cast<NodeId>(nodes.size());
      n.parent = parent;
      n.reward.support = support;
      n.reward.probs.assign(support.size(), 1.0 / static_cast<double>(support.size()));
      nodes.push_back(n);
      self(self, n.id, depth + 1);
    }
  };
  grow(grow, kRoot, 1);
  // 1/|support| may not sum to exactly 1 in floating point; fix up the last entry.
  for (auto& n : nodes) {
    if (n.reward.probs.empty()) continue;
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < n.reward.probs.size(); ++i) head += n.reward.probs[i];
    n.reward.probs.back() = 1.0 - head;
  }
  return std::make_shared<const TrialSpec>(std::move(nodes), p.click_cost, condition);
}

ConditionEnv make_condition_env(const std::string& condition, std::uint64_t seed, const ConditionTable& table) {
  ConditionEnv env;
  env.spec = table.make_spec(condition);
  env.truth = sample_ground_truth(*env.spec, seed);
  return env;
}

}  // namespace mcrl
