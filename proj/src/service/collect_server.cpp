#include "mcrl/service.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <filesystem>

#include "mcrl/env_json.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/rng.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

namespace mcrl {

void JsonlAppender::append(const std::string& line) {
  if (line.find('\n') != std::string::npos) throw AppendError("JSONL line contains a newline");
  const std::string data = line + '\n';
  std::lock_guard<std::mutex> lock(mutex_);
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw AppendError("cannot open " + path_ + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    const int err = errno;
    ::close(fd);
    throw AppendError("cannot stat " + path_ + ": " + std::strerror(err));
  }
  const ssize_t n = ::write(fd, data.data(), data.size());
  if (n != static_cast<ssize_t>(data.size()) || ::fsync(fd) != 0) {
    const int err = n < 0 ? errno : EIO;
    // drop whatever part of the line made it out
    [[maybe_unused]] const int rc = ::ftruncate(fd, st.st_size);
    ::close(fd);
    throw AppendError("write to " + path_ + " failed: " + std::strerror(err));
  }
  ::close(fd);
}

ConditionEnv session_env(std::uint64_t seed, const std::string& session, const std::string& condition, int trial,
                         const ConditionTable& table) {
  return make_condition_env(condition, derive_seed(seed, hash_string(session), stream::ground_truth, trial), table);
}

namespace {

ServiceResponse error_response(int status, const std::string& kind, const std::string& message) {
  ServiceResponse r;
  r.status = status;
  r.body["error"] = {{"kind", kind}, {"message", message}};
  return r;
}

bool parse_int(const std::string& s, int& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

struct CollectService::Http {
  httplib::Server server;
  bool bound = false;
};

CollectService::CollectService(ServeOptions options)
    : options_(std::move(options)), appender_(options_.output), http_(std::make_unique<Http>()) {
  auto& srv = http_->server;
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };

  srv.Get("/api/trials", [this, send](const httplib::Request& req, httplib::Response& res) {
    int n = kDefaultTrials;
    if (req.has_param("n") && !parse_int(req.get_param_value("n"), n))
      return send(res, error_response(400, "bad_request", "n must be an integer"));
    if (!req.has_param("session") || !req.has_param("condition"))
      return send(res, error_response(400, "bad_request", "session and condition are required"));
    send(res, trials(req.get_param_value("session"), req.get_param_value("condition"), n));
  });

  srv.Get("/api/reveal", [this, send](const httplib::Request& req, httplib::Response& res) {
    int trial = 0, node = 0;
    if (!req.has_param("session") || !req.has_param("condition") || !req.has_param("trial") ||
        !req.has_param("node"))
      return send(res, error_response(400, "bad_request", "session, condition, trial and node are required"));
    if (!parse_int(req.get_param_value("trial"), trial) || !parse_int(req.get_param_value("node"), node))
      return send(res, error_response(400, "bad_request", "trial and node must be integers"));
    send(res, reveal(req.get_param_value("session"), req.get_param_value("condition"), trial, node));
  });

  srv.Post("/api/session", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, upload(req.body));
  });

  if (!options_.static_dir.empty()) {
    if (!std::filesystem::is_directory(options_.static_dir))
      throw Error("static directory " + options_.static_dir + " does not exist");
    srv.set_mount_point("/", options_.static_dir);
  }
}

CollectService::~CollectService() { stop(); }

const ConditionTable& CollectService::table() const {
  return options_.table ? *options_.table : ConditionTable::defaults();
}

ServiceResponse CollectService::trials(const std::string& session, const std::string& condition, int n) const {
  if (!table().contains(condition)) return error_response(404, "unknown_condition", "unknown condition '" + condition + "'");
  if (session.empty()) return error_response(400, "bad_request", "empty session id");
  if (n < 1 || n > options_.max_trials)
    return error_response(400, "bad_request", "n must be in 1.." + std::to_string(options_.max_trials));
  ServiceResponse r;
  r.body["schema"] = "mcrl.session_trials/1";
  r.body["session"] = session;
  r.body["condition"] = condition;
  r.body["click_cost"] = table().params(condition).click_cost;
  auto& arr = r.body["trials"];
  arr = nlohmann::ordered_json::array();
  for (int t = 0; t < n; ++t) {
    // trial structure only; truths stay here
    const ConditionEnv env = session_env(options_.seed, session, condition, t, table());
    arr.push_back({{"trial", t}, {"spec", spec_to_json(*env.spec)}});
  }
  return r;
}

ServiceResponse CollectService::reveal(const std::string& session, const std::string& condition, int trial,
                                       int node) const {
  if (!table().contains(condition)) return error_response(404, "unknown_condition", "unknown condition '" + condition + "'");
  if (session.empty()) return error_response(400, "bad_request", "empty session id");
  if (trial < 0 || trial >= options_.max_trials) return error_response(400, "bad_request", "trial out of range");
  const ConditionEnv env = session_env(options_.seed, session, condition, trial, table());
  if (node <= kRoot || node >= static_cast<int>(env.spec->num_nodes()))
    return error_response(400, "bad_request", "node " + std::to_string(node) + " cannot be revealed");
  ServiceResponse r;
  r.body["schema"] = "mcrl.reveal/1";
  r.body["session"] = session;
  r.body["trial"] = trial;
  r.body["node"] = node;
  r.body["value"] = env.truth.value(node);
  return r;
}

ServiceResponse CollectService::upload(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "invalid_json", e.what());
  }
  ParticipantRecord record;
  try {
    if (!j.is_object()) throw SchemaError("upload must be a JSON object");
    if (j.contains("session")) {
      const std::string session = j.at("session").get<std::string>();
      const std::string condition = j.at("condition").get<std::string>();
      if (!table().contains(condition)) return error_response(404, "unknown_condition", "unknown condition '" + condition + "'");
      auto& trials = j.at("trials");
      if (!trials.is_array()) throw SchemaError("trials must be an array");
      for (std::size_t t = 0; t < trials.size(); ++t) {
        auto& jt = trials[t];
        const int index = jt.value("trial", static_cast<int>(t));
        if (index < 0 || index >= options_.max_trials)
          throw CorruptRecord(static_cast<int>(t), 0, "trial index out of range");
        const ConditionEnv env = session_env(options_.seed, session, condition, index, table());
        const auto spec = spec_to_json(*env.spec);
        const auto truth = truth_to_json(env.truth);
        if (jt.contains("spec") && nlohmann::json(spec) != jt.at("spec"))
          throw CorruptRecord(static_cast<int>(t), 0, "spec does not match session");
        if (jt.contains("truth") && nlohmann::json(truth) != jt.at("truth"))
          throw CorruptRecord(static_cast<int>(t), 0, "truth does not match session");
        jt["spec"] = spec;
        jt["truth"] = truth;
      }
    }
    record = record_from_json(j);
    if (record.trials.empty()) throw SchemaError("a session needs at least one trial");
  } catch (const CorruptRecord& e) {
    auto r = error_response(400, "corrupt_record", e.what());
    r.body["error"]["trial"] = e.trial();
    r.body["error"]["step"] = e.step();
    return r;
  } catch (const Error& e) {
    return error_response(400, "schema", e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "schema", e.what());
  }
  try {
    appender_.append(record_to_json(record).dump());
  } catch (const AppendError& e) {
    return error_response(500, "io", e.what());
  }
  int clicks = 0;
  for (const auto& t : record.trials) clicks += t.n_clicks();
  ServiceResponse r;
  r.body["status"] = "accepted";
  r.body["participant_id"] = record.participant_id;
  r.body["n_trials"] = record.trials.size();
  r.body["n_clicks"] = clicks;
  return r;
}

int CollectService::bind() {
  int port = options_.port;
  if (port == 0) {
    port = http_->server.bind_to_any_port(options_.host);
    if (port < 0) throw Error("cannot bind " + options_.host);
  } else if (!http_->server.bind_to_port(options_.host, port)) {
    throw Error("cannot bind " + options_.host + ":" + std::to_string(port));
  }
  http_->bound = true;
  return port;
}

void CollectService::listen() {
  if (!http_->bound) bind();
  http_->server.listen_after_bind();
}

void CollectService::stop() {
  if (http_ && http_->server.is_running()) http_->server.stop();
}

}  // namespace mcrl
