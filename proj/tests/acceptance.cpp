// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mcrl/env.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/metacontrol.hpp"
#include "mcrl/modelselect.hpp"
#include "mcrl/parallel.hpp"
#include "mcrl/service.hpp"
#include "mcrl/simlab.hpp"
#include "oracles.hpp"
#include "selfplay.hpp"
#include "support.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

using namespace mcrl;
using namespace mcrl::testing;

namespace {

constexpr std::uint64_t kSeed = 2024;

// Tolerances and sizes.
constexpr int kGradientInstances = 100;
constexpr double kGradientRelTol = 1e-5;
constexpr int kLvocSets = 50;
constexpr double kLvocTol = 1e-8;
constexpr int kPrTransitions = 10000;
constexpr double kLikelihoodTol = 1e-9;
constexpr double kQuickSeconds = 10.0;
constexpr double kBicSpot = 218.6438;  // 3 ln 500 + 200
constexpr double kBicTol = 1e-4;
constexpr double kSymmetryTol = 1e-9;
constexpr double kFamilyTol = 1e-12;
constexpr long kPhiDraws = 100000;
constexpr double kPhiStability = 0.02;
constexpr int kRecoveryAgents = 30;
constexpr int kTrials = 35;
constexpr int kRecoveryBudget = 100;
constexpr double kRecoveryPhi = 0.9;
constexpr double kRecoveryMinutes = 30.0;
constexpr int kCohortAgents = 30;
constexpr double kTrendAlpha = 0.05;
constexpr int kWebTrials = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %s  (%s; %.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EvidenceMatrix evidence(const Eigen::MatrixXd& L, std::vector<std::string> models) {
  EvidenceMatrix e;
  for (Eigen::Index n = 0; n < L.rows(); ++n) e.participants.push_back("p" + std::to_string(n));
  e.models = std::move(models);
  e.log_evidence = L;
  return e;
}

// ------------------------------------------------------------ criteria

Outcome gradient() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = oracle::gradient_oracle(kGradientInstances, derive_seed(kSeed, 1));
  const double secs = seconds_since(t0);
  return {g.instances == kGradientInstances && g.max_rel_error < kGradientRelTol && secs < kQuickSeconds,
          fmt("%.0f instances, max relative error %.2e", g.instances, g.max_rel_error)};
}

Outcome lvoc() {
  const auto t0 = std::chrono::steady_clock::now();
  const double err = oracle::lvoc_conjugacy_oracle(kLvocSets, derive_seed(kSeed, 2));
  const double secs = seconds_since(t0);
  return {err < kLvocTol && secs < kQuickSeconds, fmt("%.0f sets, max element difference %.2e", kLvocSets, err)};
}

Outcome pseudo_rewards() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& table = ConditionTable::defaults();
  const auto ids = table.ids();
  Rng rng(derive_seed(kSeed, 3));
  int n = 0, negative = 0, unchanged = 0, unchanged_nonzero = 0;
  for (int i = 0; n < kPrTransitions; ++i) {
    const auto env = make_condition_env(ids[static_cast<std::size_t>(i) % ids.size()], rng(), table);
    BeliefState b(env.spec);
    std::vector<NodeId> order;
    for (NodeId k = 1; k < static_cast<NodeId>(env.spec->num_nodes()); ++k) order.push_back(k);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size() && n < kPrTransitions; ++k, ++n) {
      const auto next = b.with_revealed(order[k], env.truth.value(order[k]));
      const double pr = pseudo_reward(b, next);
      negative += pr < 0.0;
      if (greedy_path(b) == greedy_path(next)) {
        ++unchanged;
        unchanged_nonzero += pr != 0.0;
      }
      b = next;
    }
  }
  // two leaves {-10, +10}: the tie goes to leaf 1; revealing leaf 2 = +10 moves the greedy path
  const auto spec = flat_spec(2);
  BeliefState b0(spec);
  const double hand = pseudo_reward(b0, b0.with_revealed(2, 10));
  const double keep = pseudo_reward(b0, b0.with_revealed(1, 10));
  const double secs = seconds_since(t0);
  return {negative == 0 && unchanged_nonzero == 0 && hand == 10.0 && keep == 0.0 && secs < kQuickSeconds,
          fmt("%.0f transitions, %.0f negative, %.0f nonzero of %.0f unchanged-path", n, negative, unchanged_nonzero,
              unchanged) +
              fmt(", tie-break example %g", hand)};
}

ParticipantRecord two_leaf_record(const std::vector<std::vector<int>>& trials) {
  ParticipantRecord r;
  r.participant_id = "p";
  r.condition = "flat";
  const auto spec = flat_spec(2, 1.0);
  for (std::size_t t = 0; t < trials.size(); ++t)
    r.trials.push_back(make_trial(spec, t % 2 ? truth_of({0, -10, 10}) : truth_of({0, 10, -10}), trials[t]));
  return r;
}

Outcome likelihood() {
  const std::vector<std::vector<int>> trials{{0}, {1, 0}, {2, 1, 0}, {1, 2, 0}, {2, 0}, {1, 0}};
  const auto record = two_leaf_record(trials);
  Rng rng(derive_seed(kSeed, 4));
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const double a = u(rng), k = u(rng), d = u(rng), c = u(rng);
    const auto nl = ModelConfig::from_id("nonlearning");
    auto pv = param_space(nl, default_registry());
    pv.set("w.is_termination", a);
    pv.set("w.clicks_so_far", k);
    pv.set("w.depth", d);
    pv.set("w.click_cost", c);
    worst = std::max(worst, std::abs(sequence_loglik(nl, pv, record, default_registry(), 1).loglik -
                                     oracle::two_leaf_nonlearning_loglik(trials, a, k, d, c, 1.0)));
    const double wn = u(rng), wb = u(rng), wl = u(rng), bias = u(rng);
    const auto hb = ModelConfig::from_id("habit");
    auto ph = param_space(hb, default_registry());
    ph.set("w_same_node", wn);
    ph.set("w_same_branch", wb);
    ph.set("w_same_level", wl);
    ph.set("termination_bias", bias);
    worst = std::max(worst, std::abs(sequence_loglik(hb, ph, record, default_registry(), 1).loglik -
                                     oracle::two_leaf_habit_loglik(trials, wn, wb, wl, bias)));
  }
  return {worst < kLikelihoodTol, fmt("40 parameter draws, max |difference| %.2e", worst)};
}

Outcome stopping() {
  bool ok = true;
  for (double tau : {0.05, 0.5, 1.0, 4.0, 30.0}) ok &= tempered_sigmoid(0.0, tau) == 0.5;
  const auto spec = ConditionTable::defaults().make_spec("exp1-far");
  BeliefState b(spec);
  double worst_half = 0.0;
  for (double eta : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    StoppingRule rule{StopRule::fixed, eta, 0, 0, 0.05};
    const double best = spec->v_min() + eta * (spec->v_max() - spec->v_min());
    worst_half = std::max(worst_half, std::abs(stop_probability(rule, b, best) - 0.5));
  }
  int violations = 0, points = 0;
  const std::vector<StoppingRule> rules{{StopRule::fixed, 0.6, 0, 0, 0.05},
                                        {StopRule::decreasing, 0, 3.0, 1.0, 2.0},
                                        {StopRule::past_performance, 10.0, 0, 0, 2.0}};
  for (const auto& rule : rules) {
    double prev = -1.0;
    for (double best = spec->v_min(); best <= spec->v_max(); best += 0.25, ++points) {
      const double p = stop_probability(rule, b, best);
      violations += !(p > prev);
      prev = p;
    }
  }
  return {ok && worst_half < 1e-12 && violations == 0,
          std::string("sigmoid(0, tau) = 0.5: ") + (ok ? "yes" : "no") +
              fmt("; fixed rule max |p - 0.5| at eta %.1e; %.0f non-increasing steps over %.0f grid points",
                  worst_half, violations, points)};
}

Outcome statistics() {
  std::vector<std::string> bad;
  if (mann_kendall({1, 3, 2, 4}).s != 4 || oracle::mk_s({1, 3, 2, 4}) != 4) bad.push_back("MK(1,3,2,4)");
  for (int n : {3, 4, 7, 12, 35}) {
    std::vector<double> up(static_cast<std::size_t>(n)), down(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) up[static_cast<std::size_t>(i)] = 0.5 * i, down[static_cast<std::size_t>(i)] = -i * i;
    if (mann_kendall(up).s != n * (n - 1) / 2 || mann_kendall(down).s != -n * (n - 1) / 2) bad.push_back("MK monotone");
  }
  if (std::abs(bic(-100.0, 3, 500) - kBicSpot) > kBicTol || bic(0.0, 0, 1) != 0.0 ||
      std::abs(bic(-50.0, 2, 35) - (2 * std::log(35.0) + 100.0)) > 1e-12)
    bad.push_back("BIC");
  BmsOptions o;
  o.seed = derive_seed(kSeed, 5);
  const auto sym = rfx_bms(evidence(Eigen::MatrixXd::Constant(20, 2, -150.0), {"a", "b"}), o);
  if (std::abs(sym.r[0] - 0.5) > kSymmetryTol || std::abs(sym.r[1] - 0.5) > kSymmetryTol) bad.push_back("rfx symmetry");

  Rng rng(derive_seed(kSeed, 6));
  std::normal_distribution<double> normal(0.0, 2.0);
  Eigen::MatrixXd L(25, 5);
  for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = -80 + normal(rng);
  const std::vector<std::string> ids{"reinforce", "reinforce+pr", "lvoc", "habit", "nonlearning"};
  const auto model = rfx_bms(evidence(L, ids), o);
  const auto fam = family_bms(evidence(L, ids), partition_by(ids, "model"), o);
  if ((model.alpha - fam.alpha).cwiseAbs().maxCoeff() > kFamilyTol || (model.phi - fam.phi).cwiseAbs().maxCoeff() > kFamilyTol)
    bad.push_back("family singleton");

  Eigen::VectorXd alpha(4);
  alpha << 6.0, 5.5, 3.0, 1.0;
  double spread = 0.0;
  const auto ref = exceedance_probabilities(alpha, kPhiDraws, derive_seed(kSeed, 7, 0));
  for (std::uint64_t s = 1; s <= 4; ++s)
    spread = std::max(spread, (ref - exceedance_probabilities(alpha, kPhiDraws, derive_seed(kSeed, 7, s))).cwiseAbs().maxCoeff());
  if (spread >= kPhiStability) bad.push_back("phi stability");

  std::string detail = bad.empty() ? "all spot checks hold" : "failed:";
  for (const auto& b : bad) detail += " " + b;
  detail += fmt("; BIC spot %.4f, rfx r = (%.6f, %.6f), phi spread %.4f", bic(-100.0, 3, 500), sym.r[0], sym.r[1], spread);
  return {bad.empty(), detail};
}

Outcome recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& reg = default_registry();
  const std::vector<std::string> models{"reinforce", "habit", "nonlearning"};
  const Partition families = partition_by(models, "base");
  std::string detail;
  bool ok = true;
  for (const std::string gen : {"reinforce", "habit"}) {
    const auto config = ModelConfig::from_id(gen);
    CohortSpec cohort;
    cohort.config = config;
    cohort.params = param_space(config, reg);
    cohort.condition = "exp1-far";
    cohort.n_agents = kRecoveryAgents;
    cohort.n_trials = kTrials;
    cohort.seed = derive_seed(kSeed, hash_string("recovery/" + gen));
    cohort.id_prefix = gen + "/recovery";
    const auto traces = simulate_cohort(cohort, reg);
    std::vector<ParticipantRecord> records;
    for (const auto& t : traces) records.push_back(t.to_record());
    std::vector<FitJob> jobs;
    for (std::size_t i = 0; i < records.size(); ++i)
      for (const auto& m : models) jobs.push_back({i, ModelConfig::from_id(m)});
    FitOptions fo;
    fo.budget = kRecoveryBudget;
    fo.seed = kSeed;
    const auto fits = run_fit_jobs(records, jobs, reg, fo);
    Eigen::MatrixXd L(kRecoveryAgents, 3);
    for (std::size_t j = 0; j < fits.size(); ++j)
      L(static_cast<Eigen::Index>(j / 3), static_cast<Eigen::Index>(j % 3)) = -fits[j].bic / 2.0;
    BmsOptions o;
    o.seed = derive_seed(kSeed, hash_string("recovery-bms/" + gen));
    const auto res = family_bms(evidence(L, models), families, o);
    Eigen::Index top = 0;
    res.r.maxCoeff(&top);
    const auto truth = static_cast<Eigen::Index>(std::find(res.labels.begin(), res.labels.end(), gen) - res.labels.begin());
    const bool good = top == truth && res.phi[truth] > kRecoveryPhi;
    ok &= good;
    if (!detail.empty()) detail += "; ";
    detail += gen + " cohort: r =";
    for (Eigen::Index k = 0; k < res.r.size(); ++k) detail += " " + res.labels[static_cast<std::size_t>(k)] + fmt(" %.3f", res.r[k]);
    detail += fmt(", phi(true) %.4f", res.phi[truth]);
  }
  const double minutes = seconds_since(t0) / 60.0;
  return {ok && minutes <= kRecoveryMinutes, detail};
}

Outcome trend(const std::string& condition, Measure measure, int want) {
  const auto& reg = default_registry();
  const auto config = ModelConfig::from_id("reinforce");
  CohortSpec cohort;
  cohort.config = config;
  cohort.params = param_space(config, reg);
  cohort.condition = condition;
  cohort.n_agents = kCohortAgents;
  cohort.n_trials = kTrials;
  cohort.seed = condition_seed(kSeed, condition);
  cohort.id_prefix = "reinforce/" + condition;
  const auto traces = simulate_cohort(cohort, reg);
  CurveOptions co;
  co.bootstrap = 0;
  co.seed = derive_seed(cohort.seed, stream::bootstrap);
  const auto curve = aggregate_curves(traces, measure, co);
  const auto mk = mann_kendall(curve.mean);
  return {mk.direction == want && mk.p < kTrendAlpha,
          fmt("S = %.0f, z = %.3f, p = %.3g", static_cast<double>(mk.s), mk.z, mk.p) +
              fmt(", first/last trial mean %.3f -> %.3f", curve.mean.front(), curve.mean.back())};
}

const std::string kCli = MCRL_CLI;

Outcome determinism() {
  TempDir dir;
  auto chain = [&](const std::string& root) {
    const std::string out = dir / root;
    const std::string pre = kCli + " --out " + out + " ";
    const std::vector<std::string> cmds{
        "grid",
        "gen-env --condition exp1-far --count 6 --seed 11",
        "simulate --model reinforce,habit,lvoc+pr --condition exp1-far,exp2-highcost-lowvariance --agents 4 "
        "--trials 8 --bootstrap 100 --seed 12",
        "ingest " + out + "/sim/reinforce/exp1-far.jsonl --write " + out + "/records.jsonl",
        "fit --records " + out + "/records.jsonl --models reinforce,habit,nonlearning,lvoc --budget 12 --seed 13",
        "select --bic " + out + "/bic.csv --partition base,pr,model --seed 14 --mc-samples 5000",
        "analyze"};
    std::string log;
    for (const auto& c : cmds) {
      const auto r = run(pre + c + " 2>&1");
      if (r.status != 0) throw std::runtime_error("'" + c + "' failed: " + r.out);
      log += r.out;
    }
    return log;
  };
  chain("a");
  chain("b");
  const auto a = tree_contents(dir.path / "a");
  const auto b = tree_contents(dir.path / "b");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) differing += a[i] != b[i];
  const bool same = a.size() == b.size() && differing == 0 && !a.empty();
  return {same, fmt("%.0f output files, %.0f differ", static_cast<double>(a.size()), static_cast<double>(differing)) +
                    " across two runs of grid, gen-env, simulate, ingest, fit, select and analyze"};
}

Outcome web_round_trip() {
  TempDir dir;
  const std::string out = dir / "srv";
  Spawned proc({kCli, "--out", out, "serve", "--port", "0", "--seed", std::to_string(kSeed)}, dir / "serve.log");
  const int port = proc.wait_for_port();
  if (port <= 0) return {false, "server did not start: " + slurp(proc.log)};
  httplib::Client client("127.0.0.1", port);
  std::vector<std::string> traffic;
  SelfPlayTransport io;
  io.trials = [&](const std::string& session, const std::string& condition, int n) {
    auto res = client.Get("/api/trials?session=" + session + "&condition=" + condition + "&n=" + std::to_string(n));
    if (!res) throw std::runtime_error("no response");
    traffic.push_back(res->body);
    return std::make_pair(res->status, res->body);
  };
  io.reveal = [&](const std::string& session, const std::string& condition, int trial, int node) {
    auto res = client.Get("/api/reveal?session=" + session + "&condition=" + condition + "&trial=" + std::to_string(trial) +
                          "&node=" + std::to_string(node));
    if (!res) throw std::runtime_error("no response");
    traffic.push_back(res->body);
    return std::make_pair(res->status, res->body);
  };
  const std::string session = "acceptance";
  const auto play = self_play(io, session, "exp1-far", kWebTrials, kSeed);
  auto up = client.Post("/api/session", play.upload.dump(), "application/json");
  proc.stop();
  if (!up || up->status != 200) return {false, "upload rejected: " + (up ? up->body : std::string("no response"))};

  // leak check: the listing carries no truth, and every value received is a node the client asked for
  bool leak = mentions_truth(nlohmann::json::parse(play.trials_body));
  std::size_t unrequested = 0;
  for (std::size_t i = 1; i < traffic.size(); ++i) {
    const auto j = nlohmann::json::parse(traffic[i]);
    const auto& rv = play.reveals[i - 1];
    unrequested += j.at("trial") != rv.trial || j.at("node") != rv.node;
  }
  std::size_t clicked = 0;
  for (const auto& rv : play.reveals) clicked += rv.clicked;
  int total_clicks = 0;
  for (int c : play.n_clicks) total_clicks += c;

  const auto records = ingest_records(out + "/sessions.jsonl");
  if (records.size() != 1 || records[0].trials.size() != static_cast<std::size_t>(kWebTrials))
    return {false, "sessions file does not hold the uploaded record"};
  const auto fit = run(kCli + " --out " + out + " fit --records " + out + "/sessions.jsonl --models reinforce --budget 20 --seed 1 2>&1");
  const bool ok = !leak && unrequested == 0 && clicked == static_cast<std::size_t>(total_clicks) && fit.status == 0;
  return {ok, fmt("%.0f trials uploaded, %.0f clicks, %.0f reveal requests", kWebTrials, total_clicks,
                  static_cast<double>(play.reveals.size())) +
                  (leak ? ", truth present in trial listing" : ", no truth in trial listing") +
                  (fit.status == 0 ? ", REINFORCE fit ok" : ", fit failed: " + fit.out)};
}

}  // namespace

int main() {
  std::printf("acceptance suite, seed %llu, %d thread(s)\n", static_cast<unsigned long long>(kSeed), max_threads());
  report("gradient oracle: REINFORCE grad log pi vs central differences", gradient);
  report("LVOC conjugacy: sequential updates equal the batch posterior", lvoc);
  report("pseudo-reward properties", pseudo_rewards);
  report("likelihood oracle: two-leaf non-learning and habit enumeration", likelihood);
  report("stopping rules", stopping);
  report("statistics oracles", statistics);
  report("model recovery: REINFORCE and habit cohorts, family BMS", recovery);
  report("qualitative: exp1-far adaptive-strategy proportion increases",
         [] { return trend("exp1-far", Measure::adaptive, +1); });
  report("qualitative: exp1-far score increases", [] { return trend("exp1-far", Measure::score, +1); });
  report("qualitative: exp2-lowcost-highvariance clicks increase",
         [] { return trend("exp2-lowcost-highvariance", Measure::clicks, +1); });
  report("qualitative: exp2-highcost-lowvariance clicks decrease",
         [] { return trend("exp2-highcost-lowvariance", Measure::clicks, -1); });
  report("determinism: CLI outputs are byte-identical across reruns", determinism);
  report("[secondary] web task round trip through serve", web_round_trip);
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
