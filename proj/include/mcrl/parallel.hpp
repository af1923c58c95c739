#pragma once

// OpenMP kernels for the embarrassingly parallel workloads. Each has a
// serial twin with identical results; work items draw from seeds derived
// from their own index, never from a shared engine.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcrl/fitkit.hpp"
#include "mcrl/simlab.hpp"

namespace mcrl {

int max_threads();
void set_threads(int n);  // n <= 0 leaves the OpenMP default

// Draws per Monte Carlo block; block b uses derive_seed(seed, stream::exceedance, b).
inline constexpr long kExceedanceBlock = 4096;

// Fraction of Dirichlet(alpha) draws in which each component is the largest.
Eigen::VectorXd exceedance_probabilities(const Eigen::VectorXd& alpha, long samples, std::uint64_t seed);
Eigen::VectorXd exceedance_probabilities_serial(const Eigen::VectorXd& alpha, long samples, std::uint64_t seed);

struct FitJob {
  std::size_t record = 0;  // index into the record list
  ModelConfig config;
};

// Results are returned in job order.
std::vector<FitResult> run_fit_jobs(const std::vector<ParticipantRecord>& records, const std::vector<FitJob>& jobs,
                                    const FeatureRegistry& registry, const FitOptions& options);
std::vector<FitResult> run_fit_jobs_serial(const std::vector<ParticipantRecord>& records,
                                           const std::vector<FitJob>& jobs, const FeatureRegistry& registry,
                                           const FitOptions& options);

struct CohortSpec {
  ModelConfig config;
  ParamVector params;
  std::string condition;
  int n_agents = 30;
  int n_trials = kDefaultTrials;
  std::uint64_t seed = 0;
  std::string id_prefix = "agent";
};

// Agent i is simulated with derive_seed(seed, stream::agent, i) and id
// "<prefix>-<i>" (zero-padded to three digits).
std::vector<SimTrace> simulate_cohort(const CohortSpec& cohort, const FeatureRegistry& registry,
                                      const SimOptions& options = {});
std::vector<SimTrace> simulate_cohort_serial(const CohortSpec& cohort, const FeatureRegistry& registry,
                                             const SimOptions& options = {});

}  // namespace mcrl
