#pragma once

// Teacher-forced likelihood of participant click sequences and per-participant
// maximum-likelihood fitting.
//
// Participant JSONL: one record per line,
//   {"schema": "mcrl.participant/1", "participant_id": "p01", "condition": "exp1-far",
//    "trials": [{"spec": <trial spec>, "truth": <ground truth>,
//                "computations": [3, 7, 0], "path": [0, 1, 2, 3], "score": 41}]}
// Computations are node ids with 0 meaning Terminate; the list ends with 0.
// "path" is optional (defaults to the greedy path of the final belief).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"
#include "mcrl/error.hpp"
#include "mcrl/features.hpp"
#include "mcrl/metacontrol.hpp"

namespace mcrl {

struct TrialRecord {
  SpecPtr spec;
  GroundTruth truth;
  std::vector<Computation> computations;
  std::optional<Path> path;
  double score = 0.0;

  int n_clicks() const;
  // Return of the chosen path (or the greedy path of the final belief).
  double path_return() const;
  BeliefState final_belief() const;
};

struct ParticipantRecord {
  std::string participant_id;
  std::string condition;
  std::vector<TrialRecord> trials;

  int n_obs() const;  // sum over trials of clicks + 1
};

// Throws CorruptRecord naming the trial and step of the first violation.
void validate_record(const ParticipantRecord& record);

nlohmann::ordered_json record_to_json(const ParticipantRecord& record);
// Parses and validates.
ParticipantRecord record_from_json(const nlohmann::json& j);

class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<ParticipantRecord> ingest_records(std::istream& in);
std::vector<ParticipantRecord> ingest_records(const std::string& path);
void write_records(std::ostream& out, const std::vector<ParticipantRecord>& records);

// --- likelihood -------------------------------------------------------------

inline constexpr double kProbabilityFloor = 1e-6;

struct LogLikelihood {
  double loglik = 0.0;
  int n_obs = 0;
};

// Replays the record through a fresh agent. Every per-decision probability is
// floored at kProbabilityFloor before the log. Throws CorruptRecord when a
// computation is invalid in its reconstructed belief.
LogLikelihood sequence_loglik(const ModelConfig& config, const ParamVector& params, const ParticipantRecord& record,
                              const FeatureRegistry& registry, std::uint64_t seed, AgentOptions options = {});

// --- derivative-free optimizer ----------------------------------------------

struct SearchOptions {
  int budget = 200;
  std::uint64_t seed = 0;
  int n_startup = -1;     // uniform random evaluations before modelling; -1 = min(budget, 10 + dim)
  int n_candidates = 24;  // draws from the good-set density per proposal
  double good_fraction = 0.25;  // good set size = ceil(good_fraction * sqrt(n))
  bool local_search = true;     // every second modelled proposal perturbs the incumbent
};

struct SearchResult {
  std::vector<double> best_x;
  double best_value = 0.0;
  std::vector<double> values;        // objective per evaluation
  std::vector<double> best_so_far;   // running maximum
};

/// Tree-structured Parzen estimator over a box, interleaved with a
/// (1+1)-ES step around the incumbent. Maximizes the objective.
/// Log-scaled and integer dimensions are searched in their natural units.
class TpeSearch {
 public:
  TpeSearch(std::vector<ParamSpec> space, SearchOptions options);

  std::vector<double> ask();
  void tell(const std::vector<double>& x, double value);
  std::size_t n_observations() const { return observed_.size(); }

  std::vector<double> to_unit(const std::vector<double>& x) const;
  std::vector<double> from_unit(const std::vector<double>& u) const;

 private:
  std::vector<double> propose_modelled();
  std::vector<double> propose_local();

  std::vector<ParamSpec> space_;
  SearchOptions options_;
  Rng rng_;
  std::vector<std::vector<double>> observed_;  // unit-cube coordinates
  std::vector<double> values_;
  bool pending_local_ = false;
  double step_ = 0.1;                // isotropic local step (unit cube)
  std::vector<double> coord_step_;   // per-coordinate local steps
  std::size_t n_local_ = 0;
  int local_dim_ = -1;               // coordinate of the pending local move, -1 = isotropic
  double incumbent_value_ = 0.0;
};

SearchResult maximize(const std::vector<ParamSpec>& space, const std::function<double(const std::vector<double>&)>& f,
                      SearchOptions options);

// --- fitting ----------------------------------------------------------------

struct FitOptions {
  int budget = 200;
  std::uint64_t seed = 0;
  AgentOptions agent;
};

struct FitResult {
  std::string participant_id;
  std::string model_id;
  std::string registry;
  ParamVector params;
  double loglik = 0.0;
  int n_obs = 0;
  int k = 0;
  double bic = 0.0;
  int budget = 0;
  std::uint64_t seed = 0;
  double epsilon = kProbabilityFloor;
  std::vector<double> best_so_far;
};

FitResult fit_participant(const ModelConfig& config, const ParticipantRecord& record, const FeatureRegistry& registry,
                          const FitOptions& options);

nlohmann::ordered_json fit_result_to_json(const FitResult& r);
FitResult fit_result_from_json(const nlohmann::json& j, const FeatureRegistry& registry);

}  // namespace mcrl
