#include <cstdio>
#include <exception>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mcrl/parallel.hpp"

namespace mcrl {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace {

void exceedance_block(const Eigen::VectorXd& alpha, long draws, std::uint64_t seed, long block,
                      std::vector<long>& counts) {
  Rng rng(derive_seed(seed, stream::exceedance, static_cast<std::uint64_t>(block)));
  const auto K = alpha.size();
  std::vector<std::gamma_distribution<double>> gammas;
  for (Eigen::Index k = 0; k < K; ++k) gammas.emplace_back(alpha[k], 1.0);
  for (long s = 0; s < draws; ++s) {
    // Normalizing would not change the argmax.
    Eigen::Index best = 0;
    double best_v = -1.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double g = gammas[static_cast<std::size_t>(k)](rng);
      if (g > best_v) {
        best_v = g;
        best = k;
      }
    }
    ++counts[static_cast<std::size_t>(best)];
  }
}

long n_blocks(long samples) { return (samples + kExceedanceBlock - 1) / kExceedanceBlock; }

long block_draws(long samples, long b) { return std::min(kExceedanceBlock, samples - b * kExceedanceBlock); }

Eigen::VectorXd to_fraction(const std::vector<std::vector<long>>& per_block, Eigen::Index K, long samples) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(K);
  for (const auto& c : per_block)
    for (Eigen::Index k = 0; k < K; ++k) phi[k] += static_cast<double>(c[static_cast<std::size_t>(k)]);
  return phi / static_cast<double>(samples);
}

void check_samples(long samples) {
  if (samples < 1) throw std::invalid_argument("exceedance: need at least one sample");
}

}  // namespace

Eigen::VectorXd exceedance_probabilities_serial(const Eigen::VectorXd& alpha, long samples, std::uint64_t seed) {
  check_samples(samples);
  const long B = n_blocks(samples);
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(B), std::vector<long>(alpha.size(), 0));
  for (long b = 0; b < B; ++b) exceedance_block(alpha, block_draws(samples, b), seed, b, counts[b]);
  return to_fraction(counts, alpha.size(), samples);
}

Eigen::VectorXd exceedance_probabilities(const Eigen::VectorXd& alpha, long samples, std::uint64_t seed) {
  check_samples(samples);
  const long B = n_blocks(samples);
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(B), std::vector<long>(alpha.size(), 0));
#pragma omp parallel for schedule(static)
  for (long b = 0; b < B; ++b) exceedance_block(alpha, block_draws(samples, b), seed, b, counts[b]);
  return to_fraction(counts, alpha.size(), samples);
}

std::vector<FitResult> run_fit_jobs_serial(const std::vector<ParticipantRecord>& records,
                                           const std::vector<FitJob>& jobs, const FeatureRegistry& registry,
                                           const FitOptions& options) {
  std::vector<FitResult> out;
  out.reserve(jobs.size());
  for (const auto& j : jobs) out.push_back(fit_participant(j.config, records.at(j.record), registry, options));
  return out;
}

std::vector<FitResult> run_fit_jobs(const std::vector<ParticipantRecord>& records, const std::vector<FitJob>& jobs,
                                    const FeatureRegistry& registry, const FitOptions& options) {
  for (const auto& j : jobs) (void)records.at(j.record);
  std::vector<FitResult> out(jobs.size());
  std::exception_ptr error;
  const auto n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          fit_participant(jobs[i].config, records[jobs[i].record], registry, options);
    } catch (...) {
#pragma omp critical(mcrl_fit_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {
std::string agent_name(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return prefix + "-" + buf;
}

SimTrace simulate_one(const CohortSpec& c, const FeatureRegistry& registry, const SimOptions& options, int i) {
  return simulate_agent(c.config, c.params, registry, c.condition, c.n_trials,
                        derive_seed(c.seed, stream::agent, static_cast<std::uint64_t>(i)), agent_name(c.id_prefix, i),
                        options);
}
}  // namespace

std::vector<SimTrace> simulate_cohort_serial(const CohortSpec& cohort, const FeatureRegistry& registry,
                                             const SimOptions& options) {
  std::vector<SimTrace> out;
  for (int i = 0; i < cohort.n_agents; ++i) out.push_back(simulate_one(cohort, registry, options, i));
  return out;
}

std::vector<SimTrace> simulate_cohort(const CohortSpec& cohort, const FeatureRegistry& registry,
                                      const SimOptions& options) {
  std::vector<SimTrace> out(static_cast<std::size_t>(std::max(0, cohort.n_agents)));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < cohort.n_agents; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = simulate_one(cohort, registry, options, i);
    } catch (...) {
#pragma omp critical(mcrl_sim_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace mcrl
