#pragma once

// Client side of the external evaluator protocol.
//
// The evaluator is a child process. Requests go to its stdin and responses
// come back on its stdout, one JSON document per line:
//
//   request:  {"v":1,"id":<uint>,"arch":<architecture document>,"epochs":<int>,"dataset":<string>}
//   response: {"v":1,"id":<uint>,"status":"ok"|"failed","error":<number in [0,1]>}
//
// Responses are matched by id and may arrive in any order. A request with no
// response before its deadline, or still pending when the child exits, is
// reported as failed.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cgpnas/evaluator.hpp"

extern char** environ;

namespace cgpnas {

inline std::string request_line(const EvaluationRequest& r) {
  nlohmann::ordered_json doc;
  doc["v"] = kProtocolVersion;
  doc["id"] = r.id;
  doc["arch"] = to_json(r.arch);
  doc["epochs"] = r.epochs;
  doc["dataset"] = r.dataset;
  return doc.dump() + "\n";
}

// Parses one response line. Returns false when the line is not a usable
// response (the caller drops it); `out` then holds nothing meaningful.
inline bool parse_response(const std::string& line, EvaluationResult& out) {
  const auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return false;
  const auto v = doc.find("v");
  const auto id = doc.find("id");
  const auto status = doc.find("status");
  if (v == doc.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion) return false;
  if (id == doc.end() || !id->is_number_unsigned()) return false;
  if (status == doc.end() || !status->is_string()) return false;
  out = {};
  out.id = id->get<std::uint64_t>();
  if (status->get<std::string>() == "ok") {
    const auto err = doc.find("error");
    if (err != doc.end() && err->is_number()) {
      const double e = err->get<double>();
      if (e >= 0.0 && e <= 1.0) {
        out.status = EvalStatus::ok;
        out.error = e;
        return true;
      }
    }
    out.status = EvalStatus::failed;
    out.diagnostics = "ok response without an error value in [0,1]";
    return true;
  }
  out.status = EvalStatus::failed;
  out.diagnostics = "evaluator reported failure";
  return true;
}

class ExternalEvaluator final : public Evaluator {
 public:
  struct Options {
    std::vector<std::string> command;
    int timeout_ms = 0;  // per request; 0 waits forever
    unsigned max_in_flight = 1;
  };

  explicit ExternalEvaluator(Options opts) : opts_(std::move(opts)) {
    if (opts_.command.empty()) throw ConfigError("external evaluator command is empty");
    if (opts_.max_in_flight == 0) opts_.max_in_flight = 1;
    ::signal(SIGPIPE, SIG_IGN);
  }

  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  ~ExternalEvaluator() override { shutdown(); }

  void start() override {
    if (!alive() && !spawn()) throw EvaluatorError("cannot start evaluator '" + opts_.command.front() + "'");
  }

  std::string name() const override { return "external"; }
  std::size_t requests_sent() const { return sent_; }
  bool alive() const { return pid_ > 0; }

  std::vector<EvaluationResult> evaluate(std::span<const EvaluationRequest> batch) override {
    using clock = std::chrono::steady_clock;
    std::vector<EvaluationResult> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = {batch[i].id, EvalStatus::failed, 1.0, "not evaluated"};
    if (batch.empty()) return out;
    if (!alive() && !spawn()) {
      for (auto& r : out) r.diagnostics = "evaluator process unavailable";
      return out;
    }

    struct Pending {
      std::size_t index;
      clock::time_point deadline;
    };
    std::map<std::uint64_t, Pending> in_flight;
    std::size_t next = 0;
    auto fail_all_in_flight = [&](const char* why) {
      for (auto& [id, p] : in_flight) out[p.index].diagnostics = why;
      in_flight.clear();
    };

    while (next < batch.size() || !in_flight.empty()) {
      while (next < batch.size() && in_flight.size() < opts_.max_in_flight) {
        const auto& req = batch[next];
        if (!write_all(request_line(req))) {
          fail_all_in_flight("evaluator process exited");
          out[next].diagnostics = "evaluator process exited";
          reap();
          for (std::size_t i = next + 1; i < batch.size(); ++i) out[i].diagnostics = "evaluator process exited";
          return out;
        }
        ++sent_;
        const auto deadline = opts_.timeout_ms > 0 ? clock::now() + std::chrono::milliseconds(opts_.timeout_ms)
                                                   : clock::time_point::max();
        in_flight[req.id] = {next, deadline};
        ++next;
      }

      int wait_ms = -1;
      if (opts_.timeout_ms > 0) {
        auto soonest = clock::time_point::max();
        for (const auto& [id, p] : in_flight) soonest = std::min(soonest, p.deadline);
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(soonest - clock::now()).count();
        wait_ms = static_cast<int>(std::max<long long>(0, left));
      }
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, wait_ms);
      if (ready < 0 && errno != EINTR) {
        fail_all_in_flight("poll failed");
        reap();
        break;
      }
      if (ready > 0) {
        char chunk[65536];
        const ssize_t got = ::read(from_child_, chunk, sizeof chunk);
        if (got <= 0) {
          fail_all_in_flight("evaluator process exited");
          reap();
          for (std::size_t i = next; i < batch.size(); ++i) out[i].diagnostics = "evaluator process exited";
          return out;
        }
        buffer_.append(chunk, static_cast<std::size_t>(got));
        std::size_t nl;
        while ((nl = buffer_.find('\n')) != std::string::npos) {
          const std::string line = buffer_.substr(0, nl);
          buffer_.erase(0, nl + 1);
          EvaluationResult r;
          if (!parse_response(line, r)) continue;
          auto it = in_flight.find(r.id);
          if (it == in_flight.end()) continue;
          out[it->second.index] = r;
          in_flight.erase(it);
        }
      }
      const auto now = clock::now();
      for (auto it = in_flight.begin(); it != in_flight.end();) {
        if (it->second.deadline <= now) {
          out[it->second.index].diagnostics = "timeout";
          it = in_flight.erase(it);
        } else {
          ++it;
        }
      }
    }
    return out;
  }

 private:
  bool spawn() {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) return false;
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      return false;
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    std::vector<char*> argv;
    for (auto& a : opts_.command) argv.push_back(a.data());
    argv.push_back(nullptr);
    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      return false;
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
    return true;
  }

  bool write_all(const std::string& s) {
    std::size_t done = 0;
    while (done < s.size()) {
      const ssize_t n = ::write(to_child_, s.data() + done, s.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  // Closes our pipe ends and collects the child, killing it if it lingers.
  void reap() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ <= 0) return;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

  void shutdown() { reap(); }

  Options opts_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::size_t sent_ = 0;
};

}  // namespace cgpnas
