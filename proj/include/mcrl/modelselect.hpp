#pragma once

// Model comparison: BIC, random-effects Bayesian model selection (model and
// family level), Delta-BIC evidence labels, and the trend / proportion tests.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace mcrl {

struct ParticipantRecord;

// k * ln(n_obs) - 2 * loglik. Throws std::invalid_argument for n_obs < 1.
double bic(double loglik, int k, int n_obs);

/// N participants x K models of log-evidence (-BIC / 2).
struct EvidenceMatrix {
  std::vector<std::string> participants;
  std::vector<std::string> models;
  Eigen::MatrixXd log_evidence;

  std::size_t n() const { return participants.size(); }
  std::size_t k() const { return models.size(); }
};

struct BmsResult {
  std::vector<std::string> labels;
  Eigen::VectorXd alpha;
  Eigen::VectorXd r;    // expected frequencies
  Eigen::VectorXd phi;  // exceedance probabilities
  Eigen::VectorXd pxp;  // protected exceedance probabilities
  double bor = 0.0;     // Bayesian omnibus risk
  long mc_samples = 0;
  int iterations = 0;
  bool converged = true;
};

inline constexpr long kDefaultMcSamples = 100000;

struct BmsOptions {
  double alpha0 = 1.0;
  double tolerance = 1e-6;
  int max_iterations = 500;
  long mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
};

// Variational random-effects BMS with a Dirichlet(alpha0) prior.
// Non-convergence within max_iterations sets converged = false.
BmsResult rfx_bms(const EvidenceMatrix& e, const BmsOptions& options = {});

struct Partition {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> members;  // model column indices per family
};

// Model columns grouped by one attribute of their ids: "base", "stage1",
// "pr", "td", or "model" (singletons).
Partition partition_by(const std::vector<std::string>& model_ids, const std::string& attribute);
Partition partition_from_json(const nlohmann::json& j, const std::vector<std::string>& model_ids);

// Family log-evidence = log-mean-exp over members, then rfx_bms over families.
EvidenceMatrix family_evidence(const EvidenceMatrix& e, const Partition& partition);
BmsResult family_bms(const EvidenceMatrix& e, const Partition& partition, const BmsOptions& options = {});

enum class EvidenceLabel { inconclusive, substantial_for_a, substantial_for_b };
inline constexpr double kDeltaBicThreshold = 3.2;
EvidenceLabel delta_bic_class(double bic_a, double bic_b);
std::string to_string(EvidenceLabel l);

struct TrendResult {
  long long s = 0;
  double variance = 0.0;
  double z = 0.0;
  double p = 1.0;
  int direction = 0;  // sign of S
};

// Mann-Kendall with tie-corrected variance and continuity correction.
// Throws std::invalid_argument for fewer than 3 values.
TrendResult mann_kendall(const std::vector<double>& x);

struct ChiSquareResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
};

// Pearson test of independence on an r x c table of counts.
ChiSquareResult chi_square_proportions(const std::vector<std::vector<double>>& counts);

// Exp. 2 conditions: Mann-Kendall on click counts, learner iff p < .05.
// Otherwise: learner iff the first-click strategy label changes.
bool classify_learner(const ParticipantRecord& record, const std::string& condition);

// --- BIC matrix CSV ---------------------------------------------------------

/// participant x model BIC values; missing cells are NaN.
struct BicTable {
  std::vector<std::string> participants;
  std::vector<std::string> models;
  Eigen::MatrixXd bic;

  std::vector<std::pair<std::string, std::string>> holes() const;
  // Throws SchemaError listing every hole.
  EvidenceMatrix evidence() const;
};

// Header: participant,<model ids...>. Empty cells are holes.
BicTable read_bic_csv(std::istream& in);
BicTable read_bic_csv(const std::string& path);
void write_bic_csv(std::ostream& out, const BicTable& table);

struct SelectionOptions {
  std::vector<std::string> partitions{"base"};
  nlohmann::json custom_partition;  // optional {"family": [model ids]} object
  BmsOptions bms;
};

// Model-level and family-level r / phi tables, mean BIC, and counts of
// Delta-BIC labels between the best model with and without pseudo-rewards.
nlohmann::ordered_json selection_report(const BicTable& table, const SelectionOptions& options);
std::string format_selection_tables(const nlohmann::ordered_json& report);

}  // namespace mcrl
