// Copyright 2026 The relfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Executor wire protocol.
//
// An executor is a child process speaking newline-delimited JSON on its
// standard streams. On startup it prints {"ready":true,"protocol":1}. Each
// request line is answered by exactly one response line; nothing else may be
// written to standard output.
//
// Request:
//   {"id": 7,
//    "source": {"api": "...", "positional": [V...], "keyword": {"k": V}},
//    "target": {"api": "...", "positional": [...], "keyword": {...}}
//           or {"api": "...", "template": "mini.f(#1, #2.dtype)", "bindings": [V...]},
//    "rtol": 0.001, "atol": 1e-06, "timeout_ms": 5000}
//
// Response:
//   {"id": 7, "status_s": "Success", "status_t": "Exception",
//    "value_equal": true,                          // iff both Success
//    "exception_class_s": "...", "exception_class_t": "...",
//    "value_summary_s": {...}, "value_summary_t": {...},
//    "detail_s": "...", "detail_t": "..."}         // all optional
//
// The source side always runs first. Before running a side the executor
// writes a progress marker to standard error:
//
//   @relfuzz phase <id> source
//   @relfuzz phase <id> target <source status>
//
// so that when the process dies mid-request the client knows which side was
// executing. Other standard error output is treated as log text.

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/status.hpp"
#include "relfuzz/synthesizer.hpp"

namespace relfuzz {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kPhaseMarker = "@relfuzz phase ";

// Executor infrastructure failure: cannot launch, handshake or keep alive.
class InfraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One side of a paired request.
struct CallSpec {
  std::string api;
  std::vector<Value> positional;
  std::map<std::string, Value> keyword;
  std::optional<std::string> template_text;
  std::vector<Value> bindings;

  static CallSpec from(const InvocationRecord& r) { return {r.api, r.positional, r.keyword, {}, {}}; }
  static CallSpec from(const TargetCall& c) {
    return {c.api, c.positional, c.keyword, c.template_text, c.bindings};
  }

  friend bool operator==(const CallSpec&, const CallSpec&) = default;
};

struct PairedRequest {
  std::uint64_t id = 0;
  CallSpec source;
  CallSpec target;
  Tolerance tolerance;
  int timeout_ms = 5000;

  friend bool operator==(const PairedRequest&, const PairedRequest&) = default;
};

struct PairedResponse {
  std::uint64_t id = 0;
  Status status_s = Status::Success;
  Status status_t = Status::Success;
  std::optional<bool> value_equal;
  std::optional<std::string> exception_class_s;
  std::optional<std::string> exception_class_t;
  std::optional<ValueSummary> value_summary_s;
  std::optional<ValueSummary> value_summary_t;
  // Crash sub-tags: "timeout", "signal 11", "exit 3", "not-executed", ...
  std::optional<std::string> detail_s;
  std::optional<std::string> detail_t;

  friend bool operator==(const PairedResponse&, const PairedResponse&) = default;
};

inline json to_json(const CallSpec& c) {
  json j = {{"api", c.api}};
  if (c.template_text) {
    j["template"] = *c.template_text;
    json b = json::array();
    for (const auto& v : c.bindings) b.push_back(to_json(v));
    j["bindings"] = std::move(b);
  } else {
    json pos = json::array();
    for (const auto& v : c.positional) pos.push_back(to_json(v));
    json kw = json::object();
    for (const auto& [k, v] : c.keyword) kw[k] = to_json(v);
    j["positional"] = std::move(pos);
    j["keyword"] = std::move(kw);
  }
  return j;
}

inline CallSpec call_from_json(const json& j) {
  CallSpec c;
  c.api = j.at("api").get<std::string>();
  if (auto it = j.find("template"); it != j.end()) {
    c.template_text = it->get<std::string>();
    for (const auto& v : j.at("bindings")) c.bindings.push_back(value_from_json(v));
  } else {
    if (auto it = j.find("positional"); it != j.end())
      for (const auto& v : *it) c.positional.push_back(value_from_json(v));
    if (auto it = j.find("keyword"); it != j.end())
      for (const auto& [k, v] : it->items()) c.keyword.emplace(k, value_from_json(v));
  }
  return c;
}

inline json to_json(const PairedRequest& r) {
  return {{"id", r.id},
          {"source", to_json(r.source)},
          {"target", to_json(r.target)},
          {"rtol", r.tolerance.rtol},
          {"atol", r.tolerance.atol},
          {"timeout_ms", r.timeout_ms}};
}

inline PairedRequest request_from_json(const json& j) {
  PairedRequest r;
  r.id = j.at("id").get<std::uint64_t>();
  r.source = call_from_json(j.at("source"));
  r.target = call_from_json(j.at("target"));
  r.tolerance.rtol = j.value("rtol", Tolerance{}.rtol);
  r.tolerance.atol = j.value("atol", Tolerance{}.atol);
  r.timeout_ms = j.value("timeout_ms", 5000);
  return r;
}

inline json to_json(const PairedResponse& r) {
  json j = {{"id", r.id}, {"status_s", status_name(r.status_s)}, {"status_t", status_name(r.status_t)}};
  if (r.value_equal) j["value_equal"] = *r.value_equal;
  if (r.exception_class_s) j["exception_class_s"] = *r.exception_class_s;
  if (r.exception_class_t) j["exception_class_t"] = *r.exception_class_t;
  if (r.value_summary_s) j["value_summary_s"] = to_json(*r.value_summary_s);
  if (r.value_summary_t) j["value_summary_t"] = to_json(*r.value_summary_t);
  if (r.detail_s) j["detail_s"] = *r.detail_s;
  if (r.detail_t) j["detail_t"] = *r.detail_t;
  return j;
}

inline PairedResponse response_from_json(const json& j) {
  PairedResponse r;
  r.id = j.at("id").get<std::uint64_t>();
  r.status_s = status_from_name(j.at("status_s").get<std::string>());
  r.status_t = status_from_name(j.at("status_t").get<std::string>());
  auto opt_str = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  auto opt_summary = [&](const char* key) -> std::optional<ValueSummary> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return summary_from_json(*it);
  };
  if (auto it = j.find("value_equal"); it != j.end() && !it->is_null()) r.value_equal = it->get<bool>();
  r.exception_class_s = opt_str("exception_class_s");
  r.exception_class_t = opt_str("exception_class_t");
  r.value_summary_s = opt_summary("value_summary_s");
  r.value_summary_t = opt_summary("value_summary_t");
  r.detail_s = opt_str("detail_s");
  r.detail_t = opt_str("detail_t");
  const bool both_success = r.status_s == Status::Success && r.status_t == Status::Success;
  if (both_success != r.value_equal.has_value())
    throw ValueError("value_equal must be present exactly when both sides succeed");
  return r;
}

// Response for a request whose executor died (or hung) while running
// `side_running`. When the target side was running, the source status comes
// from the progress marker.
inline PairedResponse crash_response(std::uint64_t id, bool target_running, Status source_status,
                                     const std::string& detail) {
  PairedResponse r;
  r.id = id;
  if (target_running) {
    r.status_s = source_status;
    r.status_t = Status::Crash;
    r.detail_t = detail;
  } else {
    r.status_s = Status::Crash;
    r.status_t = Status::Crash;
    r.detail_s = detail;
    r.detail_t = detail == "timeout" ? "not-executed (timeout)" : "not-executed";
  }
  return r;
}

class ExecutorClient {
 public:
  virtual ~ExecutorClient() = default;

  // Runs one paired request. The client assigns the request id. Executor
  // deaths are reported as Crash outcomes; only unrecoverable failures throw
  // InfraError.
  virtual PairedResponse call_paired(PairedRequest req) = 0;

  virtual std::size_t restarts() const = 0;
};

struct SubprocessOptions {
  std::string command;
  std::size_t max_restarts = 32;
  int handshake_timeout_ms = 30000;
  bool forward_stderr = true;
};

// Supervises one executor process launched through /bin/sh -c.
class SubprocessClient final : public ExecutorClient {
 public:
  explicit SubprocessClient(SubprocessOptions opts) : opts_(std::move(opts)) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    start();
  }

  ~SubprocessClient() override { stop(false); }

  SubprocessClient(const SubprocessClient&) = delete;
  SubprocessClient& operator=(const SubprocessClient&) = delete;

  std::size_t restarts() const override { return restarts_; }
  pid_t pid() const { return pid_; }

  PairedResponse call_paired(PairedRequest req) override {
    req.id = ++next_id_;
    const std::string line = to_json(req).dump() + "\n";
    if (!write_all(line)) {
      // Died between requests: not attributable to this input.
      restart();
      if (!write_all(line)) {
        auto r = crash_response(req.id, false, Status::Crash, "exit before request");
        restart();
        return r;
      }
    }

    phase_id_ = 0;
    phase_target_ = false;
    phase_source_status_ = Status::Crash;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(req.timeout_ms);
    while (true) {
      if (auto resp_line = take_line(stdout_buf_)) {
        PairedResponse resp;
        try {
          resp = response_from_json(json::parse(*resp_line));
        } catch (const std::exception& e) {
          return fail(req.id, std::string("bad response: ") + e.what(), true);
        }
        if (resp.id != req.id) return fail(req.id, "response id mismatch", true);
        return resp;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0) return fail(req.id, "timeout", true);
      if (!pump(static_cast<int>(left))) return fail(req.id, exit_detail(), false);
    }
  }

 private:
  static std::optional<std::string> take_line(std::string& buf) {
    auto nl = buf.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::string line = buf.substr(0, nl);
    buf.erase(0, nl + 1);
    return line;
  }

  void start() {
    int in[2], out[2], err[2];
    if (::pipe2(in, O_CLOEXEC) != 0 || ::pipe2(out, O_CLOEXEC) != 0 || ::pipe2(err, O_CLOEXEC) != 0)
      throw InfraError(std::string("pipe: ") + std::strerror(errno));
    const char* shell = "/bin/sh";
    const std::string cmd = opts_.command;
    pid_ = ::fork();
    if (pid_ < 0) throw InfraError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(in[0], 0);
      ::dup2(out[1], 1);
      ::dup2(err[1], 2);
      ::execl(shell, shell, "-c", cmd.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in[0]);
    ::close(out[1]);
    ::close(err[1]);
    stdin_fd_ = in[1];
    stdout_fd_ = out[0];
    stderr_fd_ = err[0];
    ::fcntl(stdout_fd_, F_SETFL, ::fcntl(stdout_fd_, F_GETFL) | O_NONBLOCK);
    ::fcntl(stderr_fd_, F_SETFL, ::fcntl(stderr_fd_, F_GETFL) | O_NONBLOCK);
    stdout_buf_.clear();
    stderr_buf_.clear();
    exited_ = false;

    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(opts_.handshake_timeout_ms);
    while (true) {
      if (auto line = take_line(stdout_buf_)) {
        try {
          auto j = json::parse(*line);
          if (j.value("ready", false) && j.value("protocol", 0) == kProtocolVersion) return;
        } catch (const json::exception&) {
        }
        stop(true);
        throw InfraError("executor '" + opts_.command + "' sent a bad handshake: " + *line);
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0 || !pump(static_cast<int>(left))) {
        const std::string why = left <= 0 ? "timed out" : exit_detail();
        stop(true);
        throw InfraError("executor '" + opts_.command + "' failed to start (" + why + ")");
      }
    }
  }

  void stop(bool force) {
    if (pid_ <= 0) return;
    if (stdin_fd_ >= 0) ::close(stdin_fd_);
    stdin_fd_ = -1;
    if (!exited_) {
      if (!force) {
        // Give a well-behaved executor a moment to exit on EOF.
        for (int i = 0; i < 50; ++i) {
          if (::waitpid(pid_, &wait_status_, WNOHANG) == pid_) {
            exited_ = true;
            break;
          }
          ::usleep(2000);
        }
      }
      if (!exited_) {
        ::kill(-pid_, SIGKILL);
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &wait_status_, 0);
        exited_ = true;
      }
    }
    if (stdout_fd_ >= 0) ::close(stdout_fd_);
    if (stderr_fd_ >= 0) ::close(stderr_fd_);
    stdout_fd_ = stderr_fd_ = -1;
    pid_ = -1;
  }

  void restart() {
    stop(true);
    if (restarts_ >= opts_.max_restarts)
      throw InfraError("executor restart budget (" + std::to_string(opts_.max_restarts) + ") exhausted");
    ++restarts_;
    start();
  }

  PairedResponse fail(std::uint64_t id, const std::string& detail, bool kill_first) {
    if (kill_first) {
      // Collect any progress marker already written before killing.
      pump(0);
    }
    auto r = crash_response(id, phase_id_ == id && phase_target_, phase_source_status_, detail);
    restart();
    return r;
  }

  bool write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  // Reads whatever is available within `timeout_ms`. Returns false once the
  // executor's standard output reached EOF (process gone).
  bool pump(int timeout_ms) {
    pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {stderr_fd_, POLLIN, 0}};
    const int n = ::poll(fds, stderr_fd_ >= 0 ? 2 : 1, timeout_ms);
    if (n < 0) return errno == EINTR;
    char buf[65536];
    if (stderr_fd_ >= 0 && (fds[1].revents & (POLLIN | POLLHUP))) {
      const ssize_t r = ::read(stderr_fd_, buf, sizeof buf);
      if (r > 0) {
        stderr_buf_.append(buf, static_cast<std::size_t>(r));
        while (auto line = take_line(stderr_buf_)) handle_stderr(*line);
      } else if (r == 0) {
        ::close(stderr_fd_);
        stderr_fd_ = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP)) {
      const ssize_t r = ::read(stdout_fd_, buf, sizeof buf);
      if (r > 0) {
        stdout_buf_.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0) {
        // drain remaining markers
        while (stderr_fd_ >= 0) {
          const ssize_t e = ::read(stderr_fd_, buf, sizeof buf);
          if (e <= 0) break;
          stderr_buf_.append(buf, static_cast<std::size_t>(e));
        }
        while (auto line = take_line(stderr_buf_)) handle_stderr(*line);
        if (!exited_ && ::waitpid(pid_, &wait_status_, 0) == pid_) exited_ = true;
        return false;
      }
    }
    return true;
  }

  void handle_stderr(const std::string& line) {
    if (line.starts_with(kPhaseMarker)) {
      std::istringstream in(line.substr(kPhaseMarker.size()));
      std::uint64_t id = 0;
      std::string side, status;
      in >> id >> side >> status;
      phase_id_ = id;
      phase_target_ = side == "target";
      if (phase_target_) {
        try {
          phase_source_status_ = status_from_name(status);
        } catch (const ValueError&) {
          phase_source_status_ = Status::Success;
        }
      }
      return;
    }
    if (opts_.forward_stderr) std::cerr << "[executor " << pid_ << "] " << line << "\n";
  }

  std::string exit_detail() const {
    if (!exited_) return "exit";
    if (WIFSIGNALED(wait_status_)) return "signal " + std::to_string(WTERMSIG(wait_status_));
    if (WIFEXITED(wait_status_)) return "exit " + std::to_string(WEXITSTATUS(wait_status_));
    return "exit";
  }

  SubprocessOptions opts_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
  std::string stdout_buf_;
  std::string stderr_buf_;
  bool exited_ = false;
  int wait_status_ = 0;
  std::uint64_t next_id_ = 0;
  std::size_t restarts_ = 0;
  std::uint64_t phase_id_ = 0;
  bool phase_target_ = false;
  Status phase_source_status_ = Status::Crash;
};

}  // namespace relfuzz
