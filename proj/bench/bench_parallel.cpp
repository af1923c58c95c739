// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "mcrl/parallel.hpp"

using namespace mcrl;

namespace {

Eigen::VectorXd bench_alpha() {
  Eigen::VectorXd a(6);
  a << 12.0, 9.5, 4.0, 2.0, 1.5, 1.0;
  return a;
}

void BM_Exceedance(benchmark::State& state) {
  const auto a = bench_alpha();
  for (auto _ : state) benchmark::DoNotOptimize(exceedance_probabilities(a, state.range(0), 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ExceedanceSerial(benchmark::State& state) {
  const auto a = bench_alpha();
  for (auto _ : state) benchmark::DoNotOptimize(exceedance_probabilities_serial(a, state.range(0), 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct FitFixture {
  std::vector<ParticipantRecord> records;
  std::vector<FitJob> jobs;
  FitOptions options;

  FitFixture() {
    const auto& reg = default_registry();
    for (int i = 0; i < 4; ++i) {
      const auto config = ModelConfig::from_id("reinforce");
      records.push_back(
          simulate_agent(config, param_space(config, reg), reg, "exp1-far", 20, derive_seed(1, i), "b" + std::to_string(i))
              .to_record());
    }
    for (std::size_t r = 0; r < records.size(); ++r)
      for (const char* id : {"reinforce", "habit", "nonlearning"}) jobs.push_back({r, ModelConfig::from_id(id)});
    options.budget = 20;
    options.seed = 2;
  }
};

const FitFixture& fit_fixture() {
  static const FitFixture f;
  return f;
}

void BM_FitJobs(benchmark::State& state) {
  const auto& f = fit_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(run_fit_jobs(f.records, f.jobs, default_registry(), f.options));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.jobs.size()));
}

void BM_FitJobsSerial(benchmark::State& state) {
  const auto& f = fit_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(run_fit_jobs_serial(f.records, f.jobs, default_registry(), f.options));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.jobs.size()));
}

CohortSpec bench_cohort() {
  CohortSpec c;
  c.config = ModelConfig::from_id("reinforce");
  c.params = param_space(c.config, default_registry());
  c.condition = "exp1-far";
  c.n_agents = 30;
  c.n_trials = 35;
  c.seed = 4;
  return c;
}

void BM_Cohort(benchmark::State& state) {
  const auto c = bench_cohort();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_cohort(c, default_registry()));
  state.SetItemsProcessed(state.iterations() * c.n_agents);
}

void BM_CohortSerial(benchmark::State& state) {
  const auto c = bench_cohort();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_cohort_serial(c, default_registry()));
  state.SetItemsProcessed(state.iterations() * c.n_agents);
}

}  // namespace

BENCHMARK(BM_Exceedance)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExceedanceSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitJobs)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitJobsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Cohort)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CohortSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
