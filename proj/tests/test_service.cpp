#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "mcrl/env_json.hpp"
#include "mcrl/fitkit.hpp"
#include "mcrl/rng.hpp"
#include "mcrl/service.hpp"
#include "selfplay.hpp"
#include "support.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>

using namespace mcrl;
using namespace mcrl::testing;
using json = nlohmann::json;

namespace {

ServeOptions options_in(const TempDir& dir, std::uint64_t seed = 5) {
  ServeOptions o;
  o.port = 0;
  o.output = dir / "sessions.jsonl";
  o.seed = seed;
  return o;
}

SelfPlayTransport direct(const CollectService& s) {
  SelfPlayTransport io;
  io.trials = [&s](const std::string& session, const std::string& condition, int n) {
    const auto r = s.trials(session, condition, n);
    return std::make_pair(r.status, r.body.dump());
  };
  io.reveal = [&s](const std::string& session, const std::string& condition, int trial, int node) {
    const auto r = s.reveal(session, condition, trial, node);
    return std::make_pair(r.status, r.body.dump());
  };
  return io;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("trials endpoint ships trial specs only, matching the session environments") {
  TempDir dir;
  CollectService s(options_in(dir));
  const auto r = s.trials("alice", "exp1-far", 4);
  REQUIRE(r.status == 200);
  CHECK(r.body["schema"] == "mcrl.session_trials/1");
  CHECK(r.body["click_cost"] == 1.0);
  REQUIRE(r.body["trials"].size() == 4);
  CHECK_FALSE(mentions_truth(r.body));
  for (int t = 0; t < 4; ++t) {
    const auto env = session_env(5, "alice", "exp1-far", t);
    CHECK(json(r.body["trials"][static_cast<std::size_t>(t)]["spec"]) == json(spec_to_json(*env.spec)));
  }
  // sessions and server seeds give different truths over the same specs
  CHECK_FALSE(session_env(5, "alice", "exp1-far", 0).truth == session_env(5, "bob", "exp1-far", 0).truth);
  CHECK_FALSE(session_env(5, "alice", "exp1-far", 0).truth == session_env(6, "alice", "exp1-far", 0).truth);
  CHECK(session_env(5, "alice", "exp1-far", 2).truth ==
        make_condition_env("exp1-far", derive_seed(5, hash_string("alice"), stream::ground_truth, 2)).truth);
}

TEST_CASE("reveal endpoint returns one node of the session's ground truth") {
  TempDir dir;
  CollectService s(options_in(dir));
  const auto env = session_env(5, "alice", "exp2-highcost-lowvariance", 3);
  for (int node = 1; node < static_cast<int>(env.spec->num_nodes()); ++node) {
    const auto r = s.reveal("alice", "exp2-highcost-lowvariance", 3, node);
    REQUIRE(r.status == 200);
    CHECK(r.body["schema"] == "mcrl.reveal/1");
    CHECK(r.body["node"] == node);
    CHECK(r.body["value"].get<double>() == env.truth.value(node));
  }
  CHECK(s.reveal("alice", "exp2-highcost-lowvariance", 3, 0).status == 400);
  CHECK(s.reveal("alice", "exp2-highcost-lowvariance", 3, 13).status == 400);
  CHECK(s.reveal("alice", "exp2-highcost-lowvariance", -1, 1).status == 400);
  CHECK(s.reveal("", "exp2-highcost-lowvariance", 0, 1).status == 400);
  const auto missing = s.reveal("alice", "exp9", 0, 1);
  CHECK(missing.status == 404);
  CHECK(missing.body["error"]["kind"] == "unknown_condition");
  CHECK(s.trials("alice", "exp9", 3).status == 404);
  CHECK(s.trials("alice", "exp1-far", 0).status == 400);
  CHECK(s.trials("alice", "exp1-far", 201).status == 400);
}

TEST_CASE("a self-played session upload appends one ingestible line") {
  TempDir dir;
  CollectService s(options_in(dir));
  const auto play = self_play(direct(s), "carol", "exp1-near", 5, 3);
  for (const auto& rv : play.reveals) CHECK(rv.node != kRoot);
  const auto r = s.upload(play.upload.dump());
  REQUIRE(r.status == 200);
  CHECK(r.body["status"] == "accepted");
  CHECK(r.body["participant_id"] == "self-carol");
  CHECK(r.body["n_trials"] == 5);
  int clicks = 0;
  for (int c : play.n_clicks) clicks += c;
  CHECK(r.body["n_clicks"] == clicks);

  const std::string text = slurp(dir / "sessions.jsonl");
  CHECK(count_lines(text) == 1);
  const auto records = ingest_records(dir / "sessions.jsonl");
  REQUIRE(records.size() == 1);
  const auto& rec = records[0];
  CHECK(rec.condition == "exp1-near");
  for (int t = 0; t < 5; ++t) {
    const auto env = session_env(5, "carol", "exp1-near", t);
    CHECK(rec.trials[static_cast<std::size_t>(t)].truth == env.truth);
    CHECK(rec.trials[static_cast<std::size_t>(t)].n_clicks() == play.n_clicks[static_cast<std::size_t>(t)]);
  }
  // ingest -> serialize -> ingest is the identity
  std::stringstream ss;
  write_records(ss, records);
  CHECK(ss.str() == text);

  CHECK(s.upload(play.upload.dump()).status == 200);
  CHECK(count_lines(slurp(dir / "sessions.jsonl")) == 2);
}

TEST_CASE("uploads carrying full trial specs and truths are accepted as-is") {
  TempDir dir;
  CollectService s(options_in(dir));
  ParticipantRecord rec;
  rec.participant_id = "offline";
  rec.condition = "exp1-far";
  const auto env = make_condition_env("exp1-far", 99);
  rec.trials.push_back(make_trial(env.spec, env.truth, {3, 0}));
  rec.trials.back().path = Path{0, 1, 2, 3};
  rec.trials.back().score = path_return(env.truth, *rec.trials.back().path) - 1.0;
  const auto r = s.upload(record_to_json(rec).dump());
  REQUIRE(r.status == 200);
  CHECK(slurp(dir / "sessions.jsonl") == record_to_json(rec).dump() + "\n");
}

TEST_CASE("invalid uploads are rejected with structured errors and nothing is written") {
  TempDir dir;
  CollectService s(options_in(dir));
  auto play = self_play(direct(s), "dave", "exp1-far", 4, 8);

  SUBCASE("click on an already revealed node names trial and step") {
    auto& comps = play.upload["trials"][2]["computations"];
    // trial 2 clicks two nodes; repeat the first click in place of the second
    comps[1] = comps[0];
    const auto r = s.upload(play.upload.dump());
    CHECK(r.status == 400);
    CHECK(r.body["error"]["kind"] == "corrupt_record");
    CHECK(r.body["error"]["trial"] == 2);
    CHECK(r.body["error"]["step"] == 1);
  }
  SUBCASE("click on an unknown node") {
    play.upload["trials"][1]["computations"] = {40, 0};
    const auto r = s.upload(play.upload.dump());
    CHECK(r.status == 400);
    CHECK(r.body["error"]["trial"] == 1);
    CHECK(r.body["error"]["step"] == 0);
  }
  SUBCASE("missing terminate") {
    play.upload["trials"][0]["computations"] = json::array();
    CHECK(s.upload(play.upload.dump()).body["error"]["kind"] == "corrupt_record");
  }
  SUBCASE("score that disagrees with the path") {
    play.upload["trials"][3]["score"] = play.upload["trials"][3]["score"].get<double>() + 1.0;
    const auto r = s.upload(play.upload.dump());
    CHECK(r.status == 400);
    CHECK(r.body["error"]["trial"] == 3);
  }
  SUBCASE("spec that differs from the session") {
    play.upload["trials"][1]["spec"] = spec_to_json(*make_condition_env("exp1-near", 1).spec);
    const auto r = s.upload(play.upload.dump());
    CHECK(r.status == 400);
    CHECK(r.body["error"]["trial"] == 1);
  }
  SUBCASE("invalid JSON") {
    const auto r = s.upload("{\"trials\": [");
    CHECK(r.status == 400);
    CHECK(r.body["error"]["kind"] == "invalid_json");
  }
  SUBCASE("wrong shape") {
    CHECK(s.upload("[1, 2]").body["error"]["kind"] == "schema");
    CHECK(s.upload("{\"participant_id\": \"x\", \"condition\": \"exp1-far\", \"trials\": []}").status == 400);
    CHECK(s.upload("{\"schema\": \"mcrl.other/1\", \"participant_id\": \"x\", \"trials\": []}").status == 400);
  }
  SUBCASE("unknown condition") {
    play.upload["condition"] = "exp3";
    const auto r = s.upload(play.upload.dump());
    CHECK(r.status == 404);
    CHECK(r.body["error"]["kind"] == "unknown_condition");
  }
  CHECK_FALSE(std::filesystem::exists(dir / "sessions.jsonl"));
}

TEST_CASE("unwritable output gives a server error and no partial line") {
  TempDir dir;
  auto o = options_in(dir);
  o.output = dir / "missing/dir/sessions.jsonl";
  CollectService s(o);
  const auto play = self_play(direct(s), "erin", "exp1-far", 2, 1);
  const auto r = s.upload(play.upload.dump());
  CHECK(r.status == 500);
  CHECK(r.body["error"]["kind"] == "io");
  CHECK_FALSE(std::filesystem::exists(o.output));

  JsonlAppender bad(dir / "nowhere/x.jsonl");
  CHECK_THROWS_AS(bad.append("{}"), AppendError);
  JsonlAppender good(dir / "x.jsonl");
  CHECK_THROWS_AS(good.append("a\nb"), AppendError);
  CHECK_FALSE(std::filesystem::exists(dir / "x.jsonl"));
}

TEST_CASE("concurrent appends never interleave lines") {
  TempDir dir;
  JsonlAppender app(dir / "c.jsonl");
  constexpr int kThreads = 8, kPer = 200;
  std::vector<std::thread> pool;
  for (int i = 0; i < kThreads; ++i)
    pool.emplace_back([&app, i] {
      for (int k = 0; k < kPer; ++k) app.append(json{{"t", i}, {"k", k}, {"pad", std::string(300, 'x')}}.dump());
    });
  for (auto& t : pool) t.join();
  std::istringstream in(slurp(dir / "c.jsonl"));
  std::string line;
  std::vector<int> seen(kThreads, 0);
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    CHECK(j["k"] == seen[j["t"].get<std::size_t>()]++);
  }
  for (int c : seen) CHECK(c == kPer);

  TempDir dir2;
  CollectService s(options_in(dir2));
  std::vector<std::string> bodies;
  for (int i = 0; i < 6; ++i)
    bodies.push_back(self_play(direct(s), "s" + std::to_string(i), "exp1-far", 3, static_cast<std::uint64_t>(i)).upload.dump());
  std::atomic<int> ok{0};
  std::vector<std::thread> uploaders;
  for (const auto& b : bodies) uploaders.emplace_back([&s, &ok, &b] { ok += s.upload(b).status == 200; });
  for (auto& t : uploaders) t.join();
  CHECK(ok == 6);
  CHECK(ingest_records(dir2 / "sessions.jsonl").size() == 6);
}

TEST_CASE("HTTP round trip over a loopback socket") {
  TempDir dir;
  spit(dir / "static/index.html", "<html>task</html>");
  auto o = options_in(dir);
  o.static_dir = dir / "static";
  CollectService s(o);
  const int port = s.bind();
  REQUIRE(port > 0);
  std::thread server([&s] { s.listen(); });
  httplib::Client cli("127.0.0.1", port);

  std::vector<std::string> traffic;
  SelfPlayTransport io;
  io.trials = [&](const std::string& session, const std::string& condition, int n) {
    auto res = cli.Get("/api/trials?session=" + session + "&condition=" + condition + "&n=" + std::to_string(n));
    traffic.push_back(res->body);
    return std::make_pair(res->status, res->body);
  };
  io.reveal = [&](const std::string& session, const std::string& condition, int trial, int node) {
    auto res = cli.Get("/api/reveal?session=" + session + "&condition=" + condition +
                       "&trial=" + std::to_string(trial) + "&node=" + std::to_string(node));
    traffic.push_back(res->body);
    return std::make_pair(res->status, res->body);
  };
  const auto play = self_play(io, "web", "exp2-lowcost-highvariance", 5, 4);
  CHECK_FALSE(mentions_truth(json::parse(play.trials_body)));
  CHECK(traffic.size() == 1 + play.reveals.size());

  auto up = cli.Post("/api/session", play.upload.dump(), "application/json");
  REQUIRE(up);
  CHECK(up->status == 200);
  CHECK(json::parse(up->body)["n_trials"] == 5);

  auto bad = cli.Post("/api/session", "not json", "application/json");
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error"]["kind"] == "invalid_json");
  CHECK(cli.Get("/api/trials?session=x")->status == 400);
  CHECK(cli.Get("/api/trials?session=x&condition=exp1-far&n=abc")->status == 400);
  CHECK(cli.Get("/api/reveal?session=x&condition=exp1-far&trial=0&node=z")->status == 400);
  CHECK(cli.Get("/api/trials?session=x&condition=nope")->status == 404);
  auto page = cli.Get("/index.html");
  REQUIRE(page);
  CHECK(page->body == "<html>task</html>");

  s.stop();
  server.join();
  CHECK(ingest_records(dir / "sessions.jsonl").size() == 1);

  auto missing = options_in(dir);
  missing.static_dir = dir / "no-such-dir";
  CHECK_THROWS_AS(CollectService{missing}, Error);
}
