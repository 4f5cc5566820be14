#include "gridpilot/backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace gridpilot {

using json = nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool retryable(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

}  // namespace

ScriptedBackend ScriptedBackend::from_json(const json& j, const std::filesystem::path& base_dir, int run) {
  const json* calls = nullptr;
  if (j.contains("runs")) {
    const json& runs = j.at("runs");
    if (run < 1 || static_cast<std::size_t>(run) > runs.size())
      throw std::invalid_argument(fmt::format("mock fixture has no script for run {}", run));
    calls = &runs.at(run - 1).at("calls");
  } else {
    calls = &j.at("calls");
  }
  std::vector<Step> steps;
  for (const json& c : *calls) {
    Step s;
    s.call = c.at("call").get<std::string>();
    if (s.call != "generate" && s.call != "edit" && s.call != "update_rules")
      throw std::invalid_argument("unknown scripted call '" + s.call + "'");
    if (c.contains("response_file")) {
      std::filesystem::path p = c.at("response_file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      s.response = read_text(p);
    } else {
      s.response = c.at("response").get<std::string>();
    }
    steps.push_back(std::move(s));
  }
  return ScriptedBackend(std::move(steps));
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path, int run) {
  return from_json(json::parse(read_text(path)), path.parent_path(), run);
}

BackendReply ScriptedBackend::take(const std::string& call) {
  if (next_ >= steps_.size())
    throw ScriptDivergence(next_, fmt::format("script exhausted at call {} ({})", next_, call));
  const Step& s = steps_[next_];
  if (s.call != call)
    throw ScriptDivergence(next_, fmt::format("script diverged at call {}: expected {}, got {}", next_, s.call, call));
  BackendReply reply{s.response, {{"backend", "scripted"}, {"call_index", next_}}};
  ++next_;
  return reply;
}

BackendReply ScriptedBackend::generate(const std::string&) { return take("generate"); }
BackendReply ScriptedBackend::edit(const std::string&, const std::string&) { return take("edit"); }
BackendReply ScriptedBackend::update_rules(const std::string&, const std::string&) { return take("update_rules"); }

HttpResponse http_post(const HttpRequest& request) {
  const std::size_t scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) return {0, "", "malformed url"};
  const std::size_t path_begin = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : request.url.substr(path_begin);

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  auto res = client.Post(path, headers, request.body, "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, ""};
}

EndpointConfig endpoint_from_json(const json& j) {
  EndpointConfig ep;
  ep.url = j.at("url").get<std::string>();
  ep.model = j.at("model").get<std::string>();
  ep.api_key_env = j.value("api_key_env", "");
  ep.temperature = j.value("temperature", ep.temperature);
  ep.timeout = std::chrono::milliseconds(static_cast<long>(j.value("timeout_s", 120.0) * 1000));
  ep.max_attempts = j.value("max_attempts", ep.max_attempts);
  ep.backoff = std::chrono::milliseconds(j.value("backoff_ms", 1000));
  ep.system_prompt = j.value("system_prompt", "");
  if (ep.max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
  return ep;
}

ChatBackend::ChatBackend(EndpointConfig learner, EndpointConfig optimizer, HttpTransport transport,
                         std::function<void(std::chrono::milliseconds)> sleep)
    : learner_(std::move(learner)),
      optimizer_(std::move(optimizer)),
      transport_(std::move(transport)),
      sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string ChatBackend::edit_message(const std::string& source, const std::string& summary) {
  return fmt::format(
      "The controller below failed the test suite.\n\n```python\n{}\n```\n\nFailures:\n{}\n\n"
      "Return the complete corrected program in one code block.",
      source, summary);
}

std::string ChatBackend::rules_message(const std::string& rules, const std::string& summary) {
  return fmt::format(
      "Current repair rules:\n{}\n\nLatest failures:\n{}\n\n"
      "Return the full replacement rules text, one rule per line, with no other text.",
      rules.empty() ? "(none)" : rules, summary);
}

BackendReply ChatBackend::complete(const EndpointConfig& ep, const std::string& user_message) {
  json messages = json::array();
  if (!ep.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", ep.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", user_message}});
  const json body = {{"model", ep.model}, {"temperature", ep.temperature}, {"messages", messages}};

  HttpRequest req;
  std::string url = ep.url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  req.url = url + "/chat/completions";
  req.body = body.dump();
  req.timeout = ep.timeout;
  if (!ep.api_key_env.empty()) {
    const char* key = std::getenv(ep.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw BackendError("credential variable " + ep.api_key_env + " is not set");
    req.headers["Authorization"] = std::string("Bearer ") + key;
  }

  std::string last_error;
  std::chrono::milliseconds delay = ep.backoff;
  for (int attempt = 1; attempt <= ep.max_attempts; ++attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    const HttpResponse res = transport_(req);
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);

    if (res.status == 200) {
      json parsed;
      try {
        parsed = json::parse(res.body);
        BackendReply reply;
        reply.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        reply.metadata = {{"backend", "chat"}, {"model", ep.model}, {"attempts", attempt},
                          {"latency_ms", latency.count()}};
        if (parsed.contains("usage")) reply.metadata["usage"] = parsed["usage"];
        return reply;
      } catch (const json::exception& e) {
        throw BackendError(std::string("malformed completion response: ") + e.what());
      }
    }
    last_error = res.status == 0 ? res.error : fmt::format("HTTP {}", res.status);
    if (!retryable(res)) break;
    if (attempt < ep.max_attempts) {
      sleep_(delay);
      delay *= 2;
    }
  }
  throw BackendError(fmt::format("{} request failed: {}", ep.model, last_error));
}

BackendReply ChatBackend::generate(const std::string& prompt) { return complete(learner_, prompt); }

BackendReply ChatBackend::edit(const std::string& source, const std::string& summary) {
  return complete(learner_, edit_message(source, summary));
}

BackendReply ChatBackend::update_rules(const std::string& rules, const std::string& summary) {
  return complete(optimizer_, rules_message(rules, summary));
}

std::unique_ptr<Backend> make_backend(const json& cfg, const std::filesystem::path& base_dir, int run) {
  const std::string kind = cfg.at("kind").get<std::string>();
  if (kind == "scripted") {
    std::filesystem::path fixture = cfg.at("fixture").get<std::string>();
    if (fixture.is_relative()) fixture = base_dir / fixture;
    return std::make_unique<ScriptedBackend>(ScriptedBackend::load(fixture, run));
  }
  if (kind == "chat") {
    const EndpointConfig learner = endpoint_from_json(cfg.at("learner"));
    const EndpointConfig optimizer = cfg.contains("optimizer") ? endpoint_from_json(cfg["optimizer"]) : learner;
    return std::make_unique<ChatBackend>(learner, optimizer);
  }
  throw std::invalid_argument("unknown backend kind '" + kind + "'");
}

}  // namespace gridpilot
