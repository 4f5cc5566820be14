#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridpilot/grid.hpp"
#include "gridpilot/sim2d.hpp"

namespace gridpilot {

/// Controller program text plus where it came from in a synthesis run.
struct CandidateSource {
  enum class Origin { kGenerated, kEdited };

  std::string text;
  Origin origin = Origin::kGenerated;
  int run = 0;
  int iteration = 0;
  int edit = 0;
  std::string extension = ".py";  ///< file suffix for the temp source file
};

/// Errors raised while driving a controller process. `kind` says which
/// contract was broken; the message is suitable for diagnostics.
class SessionError : public std::runtime_error {
 public:
  enum class Kind { kSpawn, kHandshakeTimeout, kProtocol, kTimeout, kChildExit, kQueryUnsupported, kState };

  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(SessionError::Kind kind);

enum class SessionState { kInit, kReady, kRunning, kStopped, kFailed };

struct TranscriptEntry {
  enum class Direction { kToChild, kFromChild, kNote };
  Direction direction;
  std::string line;
};

struct SessionOptions {
  /// Command template run through /bin/sh; `{source}` becomes the quoted source path.
  std::string runner_cmd = "python3 {source}";
  std::chrono::milliseconds timeout{2000};
  std::chrono::milliseconds grace{500};
};

/// One controller child process speaking newline-delimited JSON over stdio.
///
/// Message types: init, ready, sense, act, query, result, stop, error.
/// Requests and responses strictly alternate; every wait is bounded by
/// `SessionOptions::timeout`. Any error moves the session to kFailed.
class ControllerSession {
 public:
  /// Writes the source to a private temp directory, launches the child, sends
  /// init and waits for ready.
  static ControllerSession spawn(const CandidateSource& candidate, const SessionOptions& options,
                                 const nlohmann::json& params, const std::filesystem::path& grid_path, int seed = 0);

  ControllerSession(ControllerSession&& other) noexcept;
  ControllerSession& operator=(ControllerSession&& other) noexcept;
  ControllerSession(const ControllerSession&) = delete;
  ControllerSession& operator=(const ControllerSession&) = delete;
  ~ControllerSession();

  WheelCommand exchange(const Observation& obs);

  /// Sends {type:"query", op, args} and returns the `value` of the result.
  nlohmann::json query(const std::string& op, const nlohmann::json& args);

  /// Sends stop, waits out the grace period, then kills. Idempotent.
  const std::vector<TranscriptEntry>& terminate();

  SessionState state() const { return state_; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const std::string& stderr_text() const { return stderr_; }
  std::optional<int> exit_code() const { return exit_code_; }
  bool force_killed() const { return force_killed_; }

 private:
  ControllerSession() = default;

  void send(const nlohmann::json& msg);
  nlohmann::json receive(SessionError::Kind timeout_kind);
  nlohmann::json request(const nlohmann::json& msg);
  [[noreturn]] void fail(SessionError::Kind kind, const std::string& what);
  void note(const std::string& text);
  bool reap(bool block);
  void drain_stderr();
  void close_fds();
  void release();

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
  std::filesystem::path work_dir_;
  SessionOptions options_;
  SessionState state_ = SessionState::kInit;
  std::vector<TranscriptEntry> transcript_;
  std::string stdout_buffer_;
  std::size_t stdout_offset_ = 0;  ///< bytes consumed from the child's stdout so far
  std::string stderr_;
  std::optional<int> exit_code_;
  bool force_killed_ = false;
};

/// Adapter that lets run_episode drive a session.
class SessionController : public Controller {
 public:
  explicit SessionController(ControllerSession& session) : session_(session) {}
  WheelCommand act(const Observation& obs) override { return session_.exchange(obs); }

 private:
  ControllerSession& session_;
};

/// Substitutes the shell-quoted path for every `{source}` in the template.
std::string expand_runner_cmd(const std::string& runner_cmd, const std::filesystem::path& source);

}  // namespace gridpilot
