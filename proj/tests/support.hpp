#pragma once

// Small fixtures shared by the unit tests and the acceptance runner.

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcrl/env.hpp"
#include "mcrl/fitkit.hpp"

namespace mcrl::testing {

// Root with `n` leaves, each {-10, +10} with p = 0.5.
inline SpecPtr flat_spec(int n = 2, double cost = 1.0, std::vector<double> support = {-10.0, 10.0}) {
  std::vector<NodeSpec> nodes;
  nodes.push_back({kRoot, std::nullopt, 0, {}});
  std::vector<double> probs(support.size(), 1.0 / static_cast<double>(support.size()));
  for (int i = 1; i <= n; ++i) nodes.push_back({i, kRoot, 1, {support, probs}});
  return std::make_shared<const TrialSpec>(nodes, cost, "flat");
}

// Two branches of depth 2: 0 -> {1 -> 2, 3 -> 4}.
inline SpecPtr two_chain_spec(double cost = 1.0) {
  std::vector<NodeSpec> nodes;
  nodes.push_back({kRoot, std::nullopt, 0, {}});
  nodes.push_back({1, kRoot, 0, {{-1.0, 3.0}, {0.25, 0.75}}});
  nodes.push_back({2, 1, 0, {{-8.0, 2.0, 5.0}, {0.5, 0.3, 0.2}}});
  nodes.push_back({3, kRoot, 0, {{0.0, 4.0}, {0.5, 0.5}}});
  nodes.push_back({4, 3, 0, {{-6.0, 6.0}, {0.9, 0.1}}});
  return std::make_shared<const TrialSpec>(nodes, cost, "chains");
}

inline GroundTruth truth_of(std::vector<double> rewards) {
  GroundTruth g;
  g.rewards = std::move(rewards);
  return g;
}

inline TrialRecord make_trial(SpecPtr spec, GroundTruth truth, std::vector<int> codes) {
  TrialRecord t;
  t.spec = std::move(spec);
  t.truth = std::move(truth);
  for (int c : codes) t.computations.push_back(Computation::from_code(c));
  t.score = t.path_return() - t.spec->click_cost() * t.n_clicks();
  return t;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "mcrl-test-XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct RunResult {
  int status = -1;
  std::string out;
};

// Runs a shell command line, capturing stdout.
inline RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

// A child process running `argv` with stdout sent to `log`; killed on scope exit.
struct Spawned {
  pid_t pid = -1;
  std::string log;

  Spawned(const std::vector<std::string>& argv, std::string log_path) : log(std::move(log_path)) {
    pid = ::fork();
    if (pid == 0) {
      const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      ::dup2(fd, 1);
      ::dup2(fd, 2);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execv(args[0], args.data());
      ::_exit(127);
    }
  }
  Spawned(const Spawned&) = delete;
  Spawned& operator=(const Spawned&) = delete;
  ~Spawned() { stop(); }

  void stop() {
    if (pid <= 0) return;
    ::kill(pid, SIGTERM);
    int st = 0;
    ::waitpid(pid, &st, 0);
    pid = -1;
  }

  // Port from the "listening on http://host:port" line, or -1 after `timeout_s`.
  int wait_for_port(double timeout_s = 20.0) const {
    const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < until) {
      std::ifstream in(log);
      std::string line;
      while (std::getline(in, line)) {
        const auto at = line.find("listening on http://");
        if (at == std::string::npos) continue;
        const auto colon = line.find(':', at + 20);
        if (colon != std::string::npos) return std::atoi(line.c_str() + colon + 1);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return -1;
  }
};

// Every regular file under `dir`, relative path -> bytes.
inline std::vector<std::pair<std::string, std::string>> tree_contents(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mcrl::testing
