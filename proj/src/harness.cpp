#include "gridpilot/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

namespace gridpilot {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

constexpr std::size_t kStderrCap = 64 * 1024;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::filesystem::path make_work_dir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "gridpilot-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr)
    throw SessionError(SessionError::Kind::kSpawn, fmt::format("mkdtemp failed: {}", std::strerror(errno)));
  return pattern;
}

}  // namespace

std::string_view to_string(SessionError::Kind kind) {
  switch (kind) {
    case SessionError::Kind::kSpawn: return "SpawnError";
    case SessionError::Kind::kHandshakeTimeout: return "HandshakeTimeout";
    case SessionError::Kind::kProtocol: return "ProtocolError";
    case SessionError::Kind::kTimeout: return "Timeout";
    case SessionError::Kind::kChildExit: return "ChildExit";
    case SessionError::Kind::kQueryUnsupported: return "QueryUnsupported";
    case SessionError::Kind::kState: return "SessionStateError";
  }
  return "SessionError";
}

std::string expand_runner_cmd(const std::string& runner_cmd, const std::filesystem::path& source) {
  static constexpr std::string_view kPlaceholder = "{source}";
  std::string out = runner_cmd;
  const std::string quoted = shell_quote(source.string());
  for (std::size_t pos = out.find(kPlaceholder); pos != std::string::npos;
       pos = out.find(kPlaceholder, pos + quoted.size())) {
    out.replace(pos, kPlaceholder.size(), quoted);
  }
  return out;
}

ControllerSession ControllerSession::spawn(const CandidateSource& candidate, const SessionOptions& options,
                                           const json& params, const std::filesystem::path& grid_path, int seed) {
  if (options.runner_cmd.find("{source}") == std::string::npos)
    throw SessionError(SessionError::Kind::kSpawn, "runner_cmd has no {source} placeholder");
  ignore_sigpipe();

  ControllerSession s;
  s.options_ = options;
  s.work_dir_ = make_work_dir();
  const std::filesystem::path source = s.work_dir_ / ("controller" + candidate.extension);
  {
    std::ofstream out(source, std::ios::binary);
    out << candidate.text;
    if (!out) throw SessionError(SessionError::Kind::kSpawn, "cannot write candidate source");
  }
  const std::string command = expand_runner_cmd(options.runner_cmd, source);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0)
    throw SessionError(SessionError::Kind::kSpawn, fmt::format("pipe failed: {}", std::strerror(errno)));

  const pid_t pid = ::fork();
  if (pid < 0) throw SessionError(SessionError::Kind::kSpawn, fmt::format("fork failed: {}", std::strerror(errno)));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    if (::chdir(s.work_dir_.c_str()) != 0) ::_exit(126);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  s.pid_ = pid;
  s.stdin_fd_ = in_pipe[1];
  s.stdout_fd_ = out_pipe[0];
  s.stderr_fd_ = err_pipe[0];
  ::fcntl(s.stdout_fd_, F_SETFL, O_NONBLOCK);
  ::fcntl(s.stderr_fd_, F_SETFL, O_NONBLOCK);
  s.note("spawn: " + command);

  json init = {{"type", "init"}, {"params", params}, {"grid_path", grid_path.string()}, {"seed", seed}};
  try {
    s.send(init);
    const json reply = s.receive(SessionError::Kind::kHandshakeTimeout);
    if (!reply.is_object() || reply.value("type", "") != "ready")
      s.fail(SessionError::Kind::kProtocol, fmt::format("expected ready message, got {}", reply.dump()));
  } catch (const SessionError& e) {
    if (e.kind() != SessionError::Kind::kChildExit) throw;
    s.drain_stderr();
    throw SessionError(SessionError::Kind::kSpawn, fmt::format("{}; stderr: {}", e.what(), s.stderr_));
  }
  s.state_ = SessionState::kReady;
  return s;
}

ControllerSession::ControllerSession(ControllerSession&& other) noexcept { *this = std::move(other); }

ControllerSession& ControllerSession::operator=(ControllerSession&& other) noexcept {
  if (this == &other) return *this;
  release();
  pid_ = std::exchange(other.pid_, -1);
  stdin_fd_ = std::exchange(other.stdin_fd_, -1);
  stdout_fd_ = std::exchange(other.stdout_fd_, -1);
  stderr_fd_ = std::exchange(other.stderr_fd_, -1);
  work_dir_ = std::exchange(other.work_dir_, {});
  options_ = other.options_;
  state_ = std::exchange(other.state_, SessionState::kStopped);
  transcript_ = std::move(other.transcript_);
  stdout_buffer_ = std::move(other.stdout_buffer_);
  stdout_offset_ = other.stdout_offset_;
  stderr_ = std::move(other.stderr_);
  exit_code_ = other.exit_code_;
  force_killed_ = other.force_killed_;
  return *this;
}

ControllerSession::~ControllerSession() { release(); }

void ControllerSession::release() {
  if (pid_ > 0) {
    try {
      terminate();
    } catch (...) {
    }
  }
  close_fds();
  if (!work_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(work_dir_, ec);
    work_dir_.clear();
  }
}

void ControllerSession::close_fds() {
  for (int* fd : {&stdin_fd_, &stdout_fd_, &stderr_fd_}) {
    if (*fd >= 0) ::close(*fd);
    *fd = -1;
  }
}

void ControllerSession::note(const std::string& text) {
  transcript_.push_back({TranscriptEntry::Direction::kNote, text});
}

void ControllerSession::fail(SessionError::Kind kind, const std::string& what) {
  state_ = SessionState::kFailed;
  note(fmt::format("{}: {}", to_string(kind), what));
  throw SessionError(kind, what);
}

void ControllerSession::send(const json& msg) {
  std::string line = msg.dump();
  transcript_.push_back({TranscriptEntry::Direction::kToChild, line});
  line += '\n';
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(stdin_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(SessionError::Kind::kChildExit, fmt::format("write to controller failed: {}", std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

void ControllerSession::drain_stderr() {
  if (stderr_fd_ < 0) return;
  char buf[4096];
  while (true) {
    const ssize_t n = ::read(stderr_fd_, buf, sizeof buf);
    if (n <= 0) break;
    if (stderr_.size() < kStderrCap) stderr_.append(buf, static_cast<std::size_t>(n));
  }
}

json ControllerSession::receive(SessionError::Kind timeout_kind) {
  const auto deadline = Clock::now() + options_.timeout;
  while (true) {
    const std::size_t newline = stdout_buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = stdout_buffer_.substr(0, newline);
      const std::size_t line_offset = stdout_offset_;
      stdout_buffer_.erase(0, newline + 1);
      stdout_offset_ += newline + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      transcript_.push_back({TranscriptEntry::Direction::kFromChild, line});
      try {
        return json::parse(line);
      } catch (const json::parse_error& e) {
        fail(SessionError::Kind::kProtocol,
             fmt::format("malformed message at byte {} of the controller output (offset {} in line): {}",
                         line_offset + (e.byte > 0 ? e.byte - 1 : 0), e.byte > 0 ? e.byte - 1 : 0, line));
      }
    }

    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) {
      fail(timeout_kind, fmt::format("no reply within {} ms", options_.timeout.count()));
    }
    pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {stderr_fd_, POLLIN, 0}};
    const int ready = ::poll(fds, 2, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(SessionError::Kind::kProtocol, fmt::format("poll failed: {}", std::strerror(errno)));
    }
    if (fds[1].revents != 0) drain_stderr();
    if (fds[0].revents != 0) {
      char buf[4096];
      const ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
      if (n > 0) {
        stdout_buffer_.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0) {
        drain_stderr();
        reap(false);
        fail(SessionError::Kind::kChildExit,
             exit_code_ ? fmt::format("controller exited with status {}", *exit_code_) : "controller closed its output");
      } else if (errno != EAGAIN && errno != EINTR) {
        fail(SessionError::Kind::kChildExit, fmt::format("read failed: {}", std::strerror(errno)));
      }
    }
  }
}

json ControllerSession::request(const json& msg) {
  if (state_ != SessionState::kReady && state_ != SessionState::kRunning)
    throw SessionError(SessionError::Kind::kState, "session is not accepting messages");
  send(msg);
  json reply = receive(SessionError::Kind::kTimeout);
  if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string())
    fail(SessionError::Kind::kProtocol, fmt::format("message without a type: {}", reply.dump()));
  return reply;
}

WheelCommand ControllerSession::exchange(const Observation& obs) {
  json msg = {{"type", "sense"},
              {"t", obs.t},
              {"pose", {obs.pose.x, obs.pose.y, obs.pose.theta}},
              {"rays", obs.rays}};
  const json reply = request(msg);
  const std::string type = reply["type"];
  if (type == "error") fail(SessionError::Kind::kProtocol, "controller error: " + reply.value("message", reply.dump()));
  if (type != "act") fail(SessionError::Kind::kProtocol, fmt::format("expected act message, got '{}'", type));
  const auto read_speed = [&](const char* key) {
    if (!reply.contains(key) || !reply[key].is_number())
      fail(SessionError::Kind::kProtocol, fmt::format("act field '{}' missing or not a number", key));
    const double v = reply[key].get<double>();
    if (!std::isfinite(v)) fail(SessionError::Kind::kProtocol, fmt::format("act field '{}' is not finite", key));
    return v;
  };
  WheelCommand cmd{read_speed("vl"), read_speed("vr")};
  state_ = SessionState::kRunning;
  return cmd;
}

json ControllerSession::query(const std::string& op, const json& args) {
  const json reply = request({{"type", "query"}, {"op", op}, {"args", args}});
  const std::string type = reply["type"];
  if (type == "error") {
    if (reply.value("code", "") == "unsupported")
      throw SessionError(SessionError::Kind::kQueryUnsupported, fmt::format("controller does not support '{}'", op));
    fail(SessionError::Kind::kProtocol, "controller error: " + reply.value("message", reply.dump()));
  }
  if (type != "result") fail(SessionError::Kind::kProtocol, fmt::format("expected result message, got '{}'", type));
  if (!reply.contains("value")) fail(SessionError::Kind::kProtocol, "result message has no value");
  return reply["value"];
}

bool ControllerSession::reap(bool block) {
  if (pid_ <= 0) return true;
  int status = 0;
  const pid_t r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
  if (r == 0) return false;
  if (r == pid_) {
    if (WIFEXITED(status)) exit_code_ = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) exit_code_ = 128 + WTERMSIG(status);
  }
  pid_ = -1;
  return true;
}

const std::vector<TranscriptEntry>& ControllerSession::terminate() {
  if (pid_ <= 0) {
    if (state_ != SessionState::kFailed) state_ = SessionState::kStopped;
    return transcript_;
  }
  if (state_ == SessionState::kReady || state_ == SessionState::kRunning) {
    try {
      send({{"type", "stop"}});
    } catch (const SessionError&) {
    }
  }
  if (stdin_fd_ >= 0) {
    ::close(stdin_fd_);
    stdin_fd_ = -1;
  }
  const pid_t pgid = pid_;
  const auto deadline = Clock::now() + options_.grace;
  while (!reap(false) && Clock::now() < deadline) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  if (pid_ > 0) {
    ::kill(-pgid, SIGKILL);
    reap(true);
    force_killed_ = true;
    note("force-killed after grace period");
  } else {
    // Clean up anything the shell left behind in the process group.
    ::kill(-pgid, SIGKILL);
  }
  drain_stderr();
  note(fmt::format("exit status {}", exit_code_ ? *exit_code_ : -1));
  if (state_ != SessionState::kFailed) state_ = SessionState::kStopped;
  close_fds();
  return transcript_;
}

}  // namespace gridpilot
