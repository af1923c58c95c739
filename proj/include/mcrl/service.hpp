#pragma once

// Local collection service for live sessions.
//
//   GET  /api/trials?session=S&condition=C&n=35
//        -> {"schema": "mcrl.session_trials/1", "session": S, "condition": C,
//            "click_cost": 1, "trials": [{"trial": 0, "spec": <trial spec>}, ...]}
//   GET  /api/reveal?session=S&condition=C&trial=T&node=N
//        -> {"schema": "mcrl.reveal/1", "session": S, "trial": T, "node": N, "value": 24}
//   POST /api/session   body: one participant record (mcrl.participant/1)
//        -> 200 {"status": "accepted", "participant_id": ..., "n_trials": ..., "n_clicks": ...}
//
// An upload may carry "session": S and omit "spec"/"truth" in its trials;
// trial t is then rebuilt from (server seed, S, condition, "trial" index or t).
// Supplied specs/truths must match the session's. Ground truths never leave
// the server except one node per reveal request.
//
// Errors: {"error": {"kind": ..., "message": ..., ["trial": T, "step": S]}}
//   400 invalid_json | schema | corrupt_record | bad_request
//   404 unknown_condition
//   500 io (nothing was appended)

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "mcrl/env.hpp"
#include "mcrl/error.hpp"

namespace mcrl {

class AppendError : public Error {
 public:
  using Error::Error;
};

/// Appends whole lines to a JSONL file. Each append is one write(2) on an
/// O_APPEND descriptor followed by fsync; a short or failed write is
/// truncated away so readers never see a torn line.
class JsonlAppender {
 public:
  explicit JsonlAppender(std::string path) : path_(std::move(path)) {}
  const std::string& path() const { return path_; }
  // `line` must not contain a newline; one is added.
  void append(const std::string& line);

 private:
  std::string path_;
  std::mutex mutex_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::string output = "sessions.jsonl";
  std::string static_dir;  // served at / when set
  std::uint64_t seed = 0;
  int max_trials = 200;
  const ConditionTable* table = nullptr;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

// Trial t of a served session: make_condition_env(condition,
// derive_seed(seed, hash_string(session), stream::ground_truth, t)).
ConditionEnv session_env(std::uint64_t seed, const std::string& session, const std::string& condition, int trial,
                         const ConditionTable& table = ConditionTable::defaults());

class CollectService {
 public:
  explicit CollectService(ServeOptions options);
  ~CollectService();
  CollectService(const CollectService&) = delete;
  CollectService& operator=(const CollectService&) = delete;

  // Handlers, usable without a socket.
  ServiceResponse trials(const std::string& session, const std::string& condition, int n) const;
  ServiceResponse reveal(const std::string& session, const std::string& condition, int trial, int node) const;
  ServiceResponse upload(const std::string& body);

  // Binds the socket and returns the port. Throws Error when binding fails.
  int bind();
  // Serves until stop(); call bind() first.
  void listen();
  void stop();

 private:
  const ConditionTable& table() const;

  struct Http;
  ServeOptions options_;
  JsonlAppender appender_;
  std::unique_ptr<Http> http_;
};

}  // namespace mcrl
