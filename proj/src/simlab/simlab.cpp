#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "mcrl/simlab.hpp"

namespace mcrl {

std::string to_string(StrategyLabel l) { return l == StrategyLabel::adaptive ? "adaptive" : "non-adaptive"; }

bool has_strategy_rule(const std::string& condition) {
  return condition == "exp1-far" || condition == "exp1-near" || condition == "exp1-bestfirst";
}

StrategyLabel classify_strategy(std::optional<NodeId> first_click, const TrialSpec& spec, const std::string& condition) {
  if (!has_strategy_rule(condition)) throw std::invalid_argument("no strategy rule for condition " + condition);
  if (!first_click) return StrategyLabel::non_adaptive;
  const int d = spec.node(*first_click).depth;
  bool adaptive = false;
  if (condition == "exp1-far")
    adaptive = d == spec.max_depth();
  else if (condition == "exp1-near")
    adaptive = d == 1;
  else
    adaptive = d == 1 || d == 2;
  return adaptive ? StrategyLabel::adaptive : StrategyLabel::non_adaptive;
}

namespace {
std::optional<NodeId> first_click_of(const TrialRecord& t) {
  for (Computation c : t.computations)
    if (c.is_click()) return c.node();
  return std::nullopt;
}
}  // namespace

std::optional<StrategyLabel> strategy_of(const TrialRecord& trial, const std::string& condition) {
  if (!has_strategy_rule(condition)) return std::nullopt;
  return classify_strategy(first_click_of(trial), *trial.spec, condition);
}

ParticipantRecord SimTrace::to_record() const {
  ParticipantRecord r;
  r.participant_id = agent_id;
  r.condition = condition;
  for (const auto& t : trials) r.trials.push_back(t.record);
  return r;
}

SimTrace simulate_agent(const ModelConfig& config, const ParamVector& params, const FeatureRegistry& registry,
                        const std::string& condition, int n_trials, std::uint64_t seed, const std::string& agent_id,
                        const SimOptions& options) {
  if (n_trials < 0) throw std::invalid_argument("n_trials must be nonnegative");
  const ConditionTable& table = options.table ? *options.table : ConditionTable::defaults();
  Agent agent(config, params, registry, derive_seed(seed, stream::agent), options.agent);
  SimTrace trace;
  trace.agent_id = agent_id;
  trace.condition = condition;
  trace.model_id = config.id();
  for (int t = 0; t < n_trials; ++t) {
    const ConditionEnv env = make_condition_env(condition, derive_seed(seed, stream::ground_truth, t), table);
    agent.begin_trial(*env.spec);
    SimTrial st;
    st.record.spec = env.spec;
    st.record.truth = env.truth;
    BeliefState b(env.spec);
    for (;;) {
      const Computation c = agent.choose(b);
      st.record.computations.push_back(c);
      if (c.is_terminate()) {
        const Path& path = greedy_path(b);
        const double ret = path_return(env.truth, path);
        st.record.path = path;
        agent.observe(b, c, ret, b);
        st.n_clicks = b.n_clicks();
        st.record.score = ret - env.spec->click_cost() * st.n_clicks;
        break;
      }
      auto [next, r] = transition(b, c, env.truth);
      agent.observe(b, c, r.value, next);
      b = std::move(next);
    }
    agent.end_trial(st.record.score);
    st.first_click = first_click_of(st.record);
    if (has_strategy_rule(condition)) st.label = classify_strategy(st.first_click, *env.spec, condition);
    trace.trials.push_back(std::move(st));
  }
  return trace;
}

std::string to_string(Measure m) {
  switch (m) {
    case Measure::score: return "score";
    case Measure::clicks: return "clicks";
    case Measure::adaptive: return "adaptive";
  }
  return "?";
}

Measure measure_from_string(const std::string& s) {
  if (s == "score") return Measure::score;
  if (s == "clicks") return Measure::clicks;
  if (s == "adaptive") return Measure::adaptive;
  throw std::invalid_argument("unknown measure " + s);
}

std::vector<double> trace_series(const SimTrace& trace, Measure measure) {
  std::vector<double> out;
  out.reserve(trace.trials.size());
  for (const auto& t : trace.trials) {
    switch (measure) {
      case Measure::score:
        out.push_back(t.record.score);
        break;
      case Measure::clicks:
        out.push_back(t.n_clicks);
        break;
      case Measure::adaptive:
        if (!t.label) throw std::invalid_argument("condition " + trace.condition + " has no strategy labels");
        out.push_back(*t.label == StrategyLabel::adaptive ? 1.0 : 0.0);
        break;
    }
  }
  return out;
}

namespace {
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace

Curve aggregate_curves(const std::vector<SimTrace>& traces, Measure measure, const CurveOptions& options) {
  if (traces.empty()) throw std::invalid_argument("aggregate_curves: no traces");
  const std::size_t T = traces.front().trials.size();
  std::vector<std::vector<double>> series;
  for (const auto& tr : traces) {
    if (tr.trials.size() != T) throw std::invalid_argument("aggregate_curves: misaligned trial counts");
    series.push_back(trace_series(tr, measure));
  }
  const std::size_t n = series.size();
  Curve c;
  c.condition = traces.front().condition;
  c.model_id = traces.front().model_id;
  c.measure = measure;
  c.n_agents = n;
  c.mean.assign(T, 0.0);
  for (const auto& s : series)
    for (std::size_t t = 0; t < T; ++t) c.mean[t] += s[t] / static_cast<double>(n);

  // Percentile bootstrap over agents; one resample is shared by all trials.
  const int B = std::max(1, options.bootstrap);
  std::vector<std::vector<double>> boot(T, std::vector<double>(static_cast<std::size_t>(B)));
  Rng rng(derive_seed(options.seed, stream::bootstrap));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < B; ++b) {
    for (auto& i : idx) i = pick(rng);
    for (std::size_t t = 0; t < T; ++t) {
      double m = 0.0;
      for (auto i : idx) m += series[i][t];
      boot[t][static_cast<std::size_t>(b)] = m / static_cast<double>(n);
    }
  }
  c.lower.resize(T);
  c.upper.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    c.lower[t] = percentile(boot[t], 0.025);
    c.upper[t] = percentile(boot[t], 0.975);
  }
  return c;
}

void write_curve_csv_header(std::ostream& out) { out << "condition,model,measure,trial,mean,lower,upper,n\n"; }

void write_curve_csv(std::ostream& out, const Curve& curve) {
  char buf[160];
  for (std::size_t t = 0; t < curve.mean.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%zu", t + 1, curve.mean[t], curve.lower[t], curve.upper[t],
                  curve.n_agents);
    out << curve.condition << ',' << curve.model_id << ',' << to_string(curve.measure) << ',' << buf << '\n';
  }
}

}  // namespace mcrl
