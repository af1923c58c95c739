#include <doctest.h>

#include "mcrl/parallel.hpp"
#include "support.hpp"

using namespace mcrl;

TEST_CASE("exceedance: OpenMP kernel equals the serial reference bit for bit") {
  Eigen::VectorXd alpha(5);
  alpha << 3.0, 7.5, 1.0, 7.0, 2.0;
  for (long samples : {1L, 4095L, 4096L, 50001L}) {
    const auto par = exceedance_probabilities(alpha, samples, 9);
    const auto ser = exceedance_probabilities_serial(alpha, samples, 9);
    CHECK(par == ser);
    CHECK(par.sum() == doctest::Approx(1.0));
  }
  set_threads(1);
  const auto one = exceedance_probabilities(alpha, 20000, 4);
  set_threads(0);
  CHECK(one == exceedance_probabilities(alpha, 20000, 4));
  CHECK(max_threads() >= 1);
}

TEST_CASE("fit jobs: parallel and serial results agree and keep job order") {
  std::vector<ParticipantRecord> records;
  for (int i = 0; i < 3; ++i) {
    const auto config = ModelConfig::from_id(i == 1 ? "habit" : "reinforce");
    records.push_back(simulate_agent(config, param_space(config, default_registry()), default_registry(), "exp1-far",
                                     6, derive_seed(2, i), "p" + std::to_string(i))
                          .to_record());
  }
  std::vector<FitJob> jobs;
  for (std::size_t r = 0; r < records.size(); ++r)
    for (const char* id : {"habit", "reinforce", "lvoc"}) jobs.push_back({r, ModelConfig::from_id(id)});
  FitOptions fo;
  fo.budget = 12;
  fo.seed = 3;
  fo.agent.lvoc_replays = 8;
  const auto par = run_fit_jobs(records, jobs, default_registry(), fo);
  const auto ser = run_fit_jobs_serial(records, jobs, default_registry(), fo);
  REQUIRE(par.size() == jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    CHECK(fit_result_to_json(par[j]).dump() == fit_result_to_json(ser[j]).dump());
    CHECK(par[j].participant_id == records[jobs[j].record].participant_id);
    CHECK(par[j].model_id == jobs[j].config.id());
  }
}

TEST_CASE("cohorts: parallel and serial simulation agree") {
  CohortSpec spec;
  spec.config = ModelConfig::from_id("lvoc+pr");
  spec.params = param_space(spec.config, default_registry());
  spec.condition = "exp2-highcost-highvariance";
  spec.n_agents = 7;
  spec.n_trials = 5;
  spec.seed = 12;
  spec.id_prefix = "lvoc+pr/exp2";
  SimOptions so;
  so.agent.lvoc_replays = 4;
  const auto par = simulate_cohort(spec, default_registry(), so);
  const auto ser = simulate_cohort_serial(spec, default_registry(), so);
  REQUIRE(par.size() == 7);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(record_to_json(par[i].to_record()).dump() == record_to_json(ser[i].to_record()).dump());
    char id[64];
    std::snprintf(id, sizeof id, "lvoc+pr/exp2-%03zu", i);
    CHECK(par[i].agent_id == id);
  }
  // agent i is the single-agent simulation under its derived seed
  const auto solo = simulate_agent(spec.config, spec.params, default_registry(), spec.condition, spec.n_trials,
                                   derive_seed(spec.seed, stream::agent, 3), "lvoc+pr/exp2-003", so);
  CHECK(record_to_json(solo.to_record()).dump() == record_to_json(par[3].to_record()).dump());
}
