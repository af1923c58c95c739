#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mcrl/env_json.hpp"
#include "mcrl/fitkit.hpp"

namespace mcrl {

namespace {
constexpr const char* kRecordSchema = "mcrl.participant/1";
constexpr double kScoreTolerance = 1e-9;
}  // namespace

int TrialRecord::n_clicks() const {
  int n = 0;
  for (Computation c : computations) n += c.is_click() ? 1 : 0;
  return n;
}

BeliefState TrialRecord::final_belief() const {
  BeliefState b(spec);
  for (Computation c : computations)
    if (c.is_click() && b.is_valid(c)) b = b.with_revealed(c.node(), truth.value(c.node()));
  return b;
}

double TrialRecord::path_return() const {
  if (path) return mcrl::path_return(truth, *path);
  return mcrl::path_return(truth, greedy_path(final_belief()));
}

int ParticipantRecord::n_obs() const {
  int n = 0;
  for (const auto& t : trials) n += t.n_clicks() + 1;
  return n;
}

void validate_record(const ParticipantRecord& record) {
  for (std::size_t t = 0; t < record.trials.size(); ++t) {
    const auto& trial = record.trials[t];
    const int ti = static_cast<int>(t);
    if (!trial.spec) throw CorruptRecord(ti, 0, "missing trial spec");
    try {
      trial.truth.validate(*trial.spec);
    } catch (const Error& e) {
      throw CorruptRecord(ti, 0, e.what());
    }
    if (trial.computations.empty()) throw CorruptRecord(ti, 0, "no computations (must end with terminate)");
    BeliefState b(trial.spec);
    for (std::size_t s = 0; s < trial.computations.size(); ++s) {
      const Computation c = trial.computations[s];
      const int si = static_cast<int>(s);
      if (c.is_terminate()) {
        if (s + 1 != trial.computations.size()) throw CorruptRecord(ti, si, "computations continue after terminate");
        break;
      }
      if (c.node() >= static_cast<NodeId>(trial.spec->num_nodes()))
        throw CorruptRecord(ti, si, "click on unknown node " + std::to_string(c.node()));
      if (!b.is_valid(c)) throw CorruptRecord(ti, si, "click on already-revealed node " + std::to_string(c.node()));
      b = b.with_revealed(c.node(), trial.truth.value(c.node()));
    }
    if (!trial.computations.back().is_terminate())
      throw CorruptRecord(ti, static_cast<int>(trial.computations.size()) - 1, "computations must end with terminate");
    if (trial.path && !trial.spec->is_path(*trial.path))
      throw CorruptRecord(ti, static_cast<int>(trial.computations.size()) - 1, "chosen path is not root-to-leaf");
    const double expected = trial.path_return() - trial.spec->click_cost() * trial.n_clicks();
    if (std::abs(expected - trial.score) > kScoreTolerance)
      throw CorruptRecord(ti, static_cast<int>(trial.computations.size()) - 1,
                          "score " + std::to_string(trial.score) + " does not equal path return minus click costs (" +
                              std::to_string(expected) + ")");
  }
}

nlohmann::ordered_json record_to_json(const ParticipantRecord& record) {
  nlohmann::ordered_json j;
  j["schema"] = kRecordSchema;
  j["participant_id"] = record.participant_id;
  j["condition"] = record.condition;
  auto& trials = j["trials"];
  trials = nlohmann::ordered_json::array();
  for (const auto& t : record.trials) {
    nlohmann::ordered_json jt;
    jt["spec"] = spec_to_json(*t.spec);
    jt["truth"] = truth_to_json(t.truth);
    std::vector<int> codes;
    for (Computation c : t.computations) codes.push_back(c.code());
    jt["computations"] = codes;
    if (t.path) jt["path"] = *t.path;
    jt["score"] = t.score;
    trials.push_back(std::move(jt));
  }
  return j;
}

ParticipantRecord record_from_json(const nlohmann::json& j) {
  ParticipantRecord r;
  try {
    if (j.contains("schema") && j.at("schema").get<std::string>() != kRecordSchema)
      throw SchemaError(std::string("expected schema ") + kRecordSchema);
    r.participant_id = j.at("participant_id").get<std::string>();
    r.condition = j.value("condition", std::string{});
    const auto& trials = j.at("trials");
    if (!trials.is_array()) throw SchemaError("trials must be an array");
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const auto& jt = trials[t];
      TrialRecord tr;
      try {
        tr.spec = spec_from_json(jt.at("spec"));
        tr.truth = truth_from_json(jt.at("truth"), *tr.spec);
      } catch (const Error& e) {
        throw CorruptRecord(static_cast<int>(t), 0, e.what());
      }
      for (int code : jt.at("computations").get<std::vector<int>>()) {
        if (code < 0) throw CorruptRecord(static_cast<int>(t), static_cast<int>(tr.computations.size()), "negative node id");
        tr.computations.push_back(Computation::from_code(code));
      }
      if (jt.contains("path") && !jt.at("path").is_null()) tr.path = jt.at("path").get<Path>();
      tr.score = jt.at("score").get<double>();
      r.trials.push_back(std::move(tr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("participant record: ") + e.what());
  }
  validate_record(r);
  return r;
}

std::vector<ParticipantRecord> ingest_records(std::istream& in) {
  std::vector<ParticipantRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(line_no, std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
      throw IngestError(line_no, e.what());
    }
  }
  return out;
}

std::vector<ParticipantRecord> ingest_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open records file " + path);
  return ingest_records(in);
}

void write_records(std::ostream& out, const std::vector<ParticipantRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

}  // namespace mcrl
