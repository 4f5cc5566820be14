#include <gtest/gtest.h>

#include <cstdlib>

#include "gridpilot/backend.hpp"
#include "paths.hpp"

using namespace gridpilot;
using nlohmann::json;

namespace {

std::string completion(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
              {"usage", {{"total_tokens", 42}}}}
      .dump();
}

EndpointConfig endpoint(const std::string& model) {
  EndpointConfig ep;
  ep.url = "http://llm.invalid/v1/";
  ep.model = model;
  ep.api_key_env = "GRIDPILOT_TEST_KEY";
  ep.backoff = std::chrono::milliseconds(100);
  return ep;
}

struct FakeTransport {
  std::vector<HttpResponse> replies;
  std::vector<HttpRequest> seen;
  HttpResponse operator()(const HttpRequest& r) {
    seen.push_back(r);
    const HttpResponse out = replies.front();
    if (replies.size() > 1) replies.erase(replies.begin());
    return out;
  }
};

}  // namespace

TEST(Scripted, ReplaysInOrder) {
  ScriptedBackend b({{"generate", "g1"}, {"edit", "e1"}, {"update_rules", "r1"}});
  EXPECT_EQ(b.generate("p").text, "g1");
  EXPECT_EQ(b.edit("src", "sum").text, "e1");
  const BackendReply r = b.update_rules("rules", "sum");
  EXPECT_EQ(r.text, "r1");
  EXPECT_EQ(r.metadata.at("call_index"), 2);
  EXPECT_TRUE(b.exhausted());
}

TEST(Scripted, DivergenceReportsIndex) {
  ScriptedBackend b({{"generate", "g1"}, {"edit", "e1"}});
  b.generate("p");
  try {
    b.update_rules("r", "s");
    FAIL();
  } catch (const ScriptDivergence& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  ScriptedBackend short_script(std::vector<ScriptedBackend::Step>{{"generate", "g"}});
  short_script.generate("p");
  try {
    short_script.generate("p");
    FAIL();
  } catch (const ScriptDivergence& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Scripted, FixtureFilesAndRuns) {
  const auto dir = testpaths::scratch("scripted");
  std::ofstream(dir / "resp.txt") << "from file";
  const json j = {{"runs",
                   {{{"calls", {{{"call", "generate"}, {"response", "run one"}}}}},
                    {{"calls", {{{"call", "generate"}, {"response_file", "resp.txt"}}}}}}}};
  EXPECT_EQ(ScriptedBackend::from_json(j, dir, 1).generate("").text, "run one");
  EXPECT_EQ(ScriptedBackend::from_json(j, dir, 2).generate("").text, "from file");
  EXPECT_THROW(ScriptedBackend::from_json(j, dir, 3), std::invalid_argument);
  EXPECT_THROW(ScriptedBackend::from_json({{"calls", {{{"call", "dance"}, {"response", ""}}}}}, dir),
               std::invalid_argument);
}

TEST(Scripted, ShippedMockScriptLoads) {
  ScriptedBackend b = ScriptedBackend::load(testpaths::data("configs/mock_script.json"));
  EXPECT_NE(b.generate("").text.find("scipy"), std::string::npos);
}

TEST(Chat, RequestShapeAndHeaders) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{200, completion("```python\nprint(1)\n```"), ""}}, {}};
  EndpointConfig learner = endpoint("learner-model");
  learner.system_prompt = "be terse";
  ChatBackend b(learner, endpoint("optimizer-model"), std::ref(t), [](auto) {});
  const BackendReply r = b.generate("write a controller");
  EXPECT_EQ(r.text, "```python\nprint(1)\n```");
  EXPECT_EQ(r.metadata.at("model"), "learner-model");
  EXPECT_EQ(r.metadata.at("attempts"), 1);
  EXPECT_EQ(r.metadata.at("usage").at("total_tokens"), 42);
  ASSERT_EQ(t.seen.size(), 1u);
  EXPECT_EQ(t.seen[0].url, "http://llm.invalid/v1/chat/completions");
  EXPECT_EQ(t.seen[0].headers.at("Authorization"), "Bearer sk-test");
  const json body = json::parse(t.seen[0].body);
  EXPECT_EQ(body.at("model"), "learner-model");
  EXPECT_EQ(body.at("messages").size(), 2u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "system");
  EXPECT_EQ(body.at("messages")[1].at("content"), "write a controller");
}

TEST(Chat, RolesUseTheirEndpoints) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{200, completion("ok"), ""}}, {}};
  ChatBackend b(endpoint("learner-model"), endpoint("optimizer-model"), std::ref(t), [](auto) {});
  b.edit("SOURCE_TEXT", "SUMMARY_TEXT");
  b.update_rules("RULES_TEXT", "SUMMARY_TEXT");
  ASSERT_EQ(t.seen.size(), 2u);
  const json edit = json::parse(t.seen[0].body), rules = json::parse(t.seen[1].body);
  EXPECT_EQ(edit.at("model"), "learner-model");
  EXPECT_EQ(rules.at("model"), "optimizer-model");
  const std::string edit_msg = edit.at("messages").back().at("content");
  EXPECT_EQ(edit_msg, ChatBackend::edit_message("SOURCE_TEXT", "SUMMARY_TEXT"));
  EXPECT_NE(edit_msg.find("SOURCE_TEXT"), std::string::npos);
  EXPECT_NE(edit_msg.find("SUMMARY_TEXT"), std::string::npos);
  const std::string rules_msg = rules.at("messages").back().at("content");
  EXPECT_NE(rules_msg.find("RULES_TEXT"), std::string::npos);
  EXPECT_NE(rules_msg.find("SUMMARY_TEXT"), std::string::npos);
}

TEST(Chat, RetriesTransientFailuresWithBackoff) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{0, "", "connection refused"}, {503, "busy", ""}, {200, completion("third time"), ""}}, {}};
  std::vector<long> sleeps;
  ChatBackend b(endpoint("m"), endpoint("m"), std::ref(t), [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  const BackendReply r = b.generate("p");
  EXPECT_EQ(r.text, "third time");
  EXPECT_EQ(r.metadata.at("attempts"), 3);
  EXPECT_EQ(sleeps, (std::vector<long>{100, 200}));
}

TEST(Chat, GivesUpAfterMaxAttempts) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{429, "slow down", ""}}, {}};
  ChatBackend b(endpoint("m"), endpoint("m"), std::ref(t), [](auto) {});
  try {
    b.generate("p");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 429"), std::string::npos);
  }
  EXPECT_EQ(t.seen.size(), 3u);
}

TEST(Chat, ClientErrorsAreNotRetried) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{400, "bad request", ""}}, {}};
  ChatBackend b(endpoint("m"), endpoint("m"), std::ref(t), [](auto) {});
  EXPECT_THROW(b.generate("p"), BackendError);
  EXPECT_EQ(t.seen.size(), 1u);
}

TEST(Chat, MalformedBodyAndMissingKey) {
  ::setenv("GRIDPILOT_TEST_KEY", "sk-test", 1);
  FakeTransport t{{{200, "{\"choices\": []}", ""}}, {}};
  ChatBackend b(endpoint("m"), endpoint("m"), std::ref(t), [](auto) {});
  EXPECT_THROW(b.generate("p"), BackendError);
  ::unsetenv("GRIDPILOT_TEST_KEY");
  FakeTransport unused{{{200, completion("x"), ""}}, {}};
  ChatBackend keyless(endpoint("m"), endpoint("m"), std::ref(unused), [](auto) {});
  EXPECT_THROW(keyless.generate("p"), BackendError);
  EXPECT_TRUE(unused.seen.empty());
}

TEST(Factory, BuildsBackendsFromConfig) {
  const auto scripted = make_backend({{"kind", "scripted"}, {"fixture", "mock_script.json"}}, testpaths::data("configs"), 1);
  ASSERT_TRUE(scripted);
  EXPECT_NE(scripted->generate("").text.find("scipy"), std::string::npos);
  EXPECT_THROW(make_backend({{"kind", "oracle"}}, ".", 1), std::invalid_argument);
  const EndpointConfig ep = endpoint_from_json({{"url", "http://x"}, {"model", "m"}, {"timeout_s", 5}, {"backoff_ms", 10}});
  EXPECT_EQ(ep.timeout, std::chrono::milliseconds(5000));
  EXPECT_EQ(ep.backoff, std::chrono::milliseconds(10));
  EXPECT_EQ(ep.max_attempts, 3);
}
