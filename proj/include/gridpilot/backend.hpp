#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gridpilot {

struct BackendReply {
  std::string text;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Transport or protocol failure that survived all retries.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scripted backend was called out of order or past its end.
class ScriptDivergence : public std::logic_error {
 public:
  ScriptDivergence(std::size_t index, const std::string& what) : std::logic_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Learner (generate, edit) and optimizer (update_rules) roles.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply generate(const std::string& prompt) = 0;
  virtual BackendReply edit(const std::string& source, const std::string& summary) = 0;
  virtual BackendReply update_rules(const std::string& rules, const std::string& summary) = 0;
};

/// Replays a fixed list of (expected call, response) pairs.
class ScriptedBackend : public Backend {
 public:
  struct Step {
    std::string call;  ///< "generate", "edit" or "update_rules"
    std::string response;
  };

  explicit ScriptedBackend(std::vector<Step> steps) : steps_(std::move(steps)) {}

  /// Fixture: {"calls": [...]} or {"runs": [{"calls": [...]}, ...]}. Each call is
  /// {"call": name, "response": text} or {"call": name, "response_file": path};
  /// relative paths resolve against `base_dir`. `run` (1-based) selects from "runs".
  static ScriptedBackend from_json(const nlohmann::json& j, const std::filesystem::path& base_dir, int run = 1);
  static ScriptedBackend load(const std::filesystem::path& path, int run = 1);

  BackendReply generate(const std::string& prompt) override;
  BackendReply edit(const std::string& source, const std::string& summary) override;
  BackendReply update_rules(const std::string& rules, const std::string& summary) override;

  std::size_t position() const { return next_; }
  bool exhausted() const { return next_ >= steps_.size(); }

 private:
  BackendReply take(const std::string& call);

  std::vector<Step> steps_;
  std::size_t next_ = 0;
};

struct HttpRequest {
  std::string url;  ///< full URL including path
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  int status = 0;  ///< 0 on transport failure
  std::string body;
  std::string error;
};

using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

/// cpp-httplib POST.
HttpResponse http_post(const HttpRequest& request);

struct EndpointConfig {
  std::string url;  ///< base URL; "/chat/completions" is appended
  std::string model;
  std::string api_key_env;  ///< name of the variable holding the key, never the key
  double temperature = 0.2;
  std::chrono::milliseconds timeout{120000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff{1000};
  std::string system_prompt;
};

EndpointConfig endpoint_from_json(const nlohmann::json& j);

/// Chat-completion client with a learner endpoint and an optimizer endpoint.
class ChatBackend : public Backend {
 public:
  ChatBackend(EndpointConfig learner, EndpointConfig optimizer, HttpTransport transport = http_post,
              std::function<void(std::chrono::milliseconds)> sleep = nullptr);

  BackendReply generate(const std::string& prompt) override;
  BackendReply edit(const std::string& source, const std::string& summary) override;
  BackendReply update_rules(const std::string& rules, const std::string& summary) override;

  static std::string edit_message(const std::string& source, const std::string& summary);
  static std::string rules_message(const std::string& rules, const std::string& summary);

 private:
  BackendReply complete(const EndpointConfig& ep, const std::string& user_message);

  EndpointConfig learner_;
  EndpointConfig optimizer_;
  HttpTransport transport_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

/// Builds a backend from the "backend" object of an experiment config:
/// {"kind": "scripted", "fixture": path} or {"kind": "chat", "learner": {...}, "optimizer": {...}}.
std::unique_ptr<Backend> make_backend(const nlohmann::json& cfg, const std::filesystem::path& base_dir, int run);

}  // namespace gridpilot
