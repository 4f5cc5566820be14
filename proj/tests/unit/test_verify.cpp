#include <gtest/gtest.h>

#include <regex>

#include "generators.hpp"
#include "gridpilot/runner.hpp"
#include "gridpilot/verify.hpp"
#include "paths.hpp"

using namespace gridpilot;
using nlohmann::json;

namespace {

const Environment& sample_env() {
  static const Environment env = [] {
    SessionOptions session;
    session.runner_cmd = testpaths::runner_cmd();
    return load_environment(testpaths::data("maps/sample/params.json"), testpaths::data("maps/sample/occupancy.png"),
                            testpaths::data("suites/nav2d_default.json"), session);
  }();
  return env;
}

std::string reference() { return testpaths::read(testpaths::data("controllers/reference_controller.py")); }

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << "mutation target missing: " << from;
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

const CheckResult& result(const DiagnosticReport& r, const std::string& id) {
  for (const auto& c : r.results)
    if (c.id == id) return c;
  throw std::runtime_error("no result " + id);
}

std::set<std::string> non_passing(const DiagnosticReport& r) {
  std::set<std::string> out;
  for (const auto& c : r.results)
    if (c.status != CheckStatus::kPass) out.insert(c.id);
  return out;
}

json check(const std::string& id, const std::string& category, const std::string& kind, json params = json::object()) {
  return {{"id", id}, {"category", category}, {"kind", kind}, {"description", id}, {"parameters", params}};
}

}  // namespace

TEST(Suite, ParsesDefaultSuite) {
  const Suite s = load_suite(testpaths::data("suites/nav2d_default.json"));
  EXPECT_EQ(s.checks.size(), 12u);
  EXPECT_EQ(s.seed, 7);
  EXPECT_EQ(s.checks.front().category, CheckCategory::kStaticContract);
  EXPECT_EQ(s.overrides.at("progress_window"), 400);
}

TEST(Suite, RejectsBadDefinitions) {
  EXPECT_THROW(parse_suite({{"name", "x"}, {"checks", json::array()}}), std::invalid_argument);
  EXPECT_THROW(parse_suite({{"name", "x"}, {"checks", {check("a", "static", "nonsense")}}}), std::invalid_argument);
  EXPECT_THROW(parse_suite({{"name", "x"}, {"checks", {check("a", "cosmic", "success")}}}), std::invalid_argument);
  EXPECT_THROW(parse_suite({{"name", "x"},
                            {"checks", {check("a", "e2e", "success"), check("a", "e2e", "progress")}}}),
               std::invalid_argument);
  EXPECT_THROW(load_suite("/nonexistent/suite.json"), std::runtime_error);
}

TEST(Messages, FixedPhrasings) {
  EXPECT_EQ(progress_failure_message(209.6, 222.4, 0.7),
            "No significant progress toward goal (209.6 (d_min) ≥ 0.7 × 222.4 (d0)).");
  Measurements m;
  m.d_min = 199.94;
  EXPECT_EQ(success_failure_message(m, 20.0), "Did not reach goal. (d_min=199.9, collision=0).");
  m.goal_reached = true;
  m.collisions = 2;
  EXPECT_EQ(success_failure_message(m, 20.0), "Reached goal with collisions (collisions=2, d_min=199.9).");
}

TEST(StaticChecks, TokensAndPatterns) {
  const std::vector<CheckSpec> checks = parse_suite({{"name", "s"},
                                                     {"checks",
                                                      {check("tok", "static", "required_tokens",
                                                             {{"tokens", {"ALPHA", "BETA"}}}),
                                                       check("ban", "static", "banned_pattern",
                                                             {{"pattern", "\\bscipy\\b"}, {"message", "no scipy"}})}}})
                                            .checks;
  const auto ok = run_static_checks({"ALPHA = 1\nBETA = 2\n"}, checks);
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok[0].status, CheckStatus::kPass);
  EXPECT_EQ(ok[1].status, CheckStatus::kPass);
  const auto bad = run_static_checks({"ALPHA = 1\nimport scipy\n"}, checks);
  EXPECT_EQ(bad[0].status, CheckStatus::kFail);
  EXPECT_EQ(bad[0].message, "missing required constant BETA");
  EXPECT_EQ(bad[1].status, CheckStatus::kFail);
  EXPECT_EQ(bad[1].message, "no scipy");
  EXPECT_EQ(run_static_checks({"ALPHA BETA scipyx"}, checks)[1].status, CheckStatus::kPass);
}

TEST(StaticChecks, FailingCountMatchesIndependentScan) {
  const std::vector<std::string> tokens{"SENSOR_RANGE", "AXLE_LENGTH", "N_RAYS", "def main"};
  const std::vector<std::pair<std::string, std::string>> banned{
      {"\\bscipy\\b", "import scipy"}, {"raise\\s+RuntimeError\\b", "raise RuntimeError('x')"}, {"\\bpygame\\b", "import pygame"}};
  json checks = json::array();
  for (std::size_t i = 0; i < tokens.size(); ++i)
    checks.push_back(check("tok" + std::to_string(i), "static", "required_tokens", {{"tokens", {tokens[i]}}}));
  for (std::size_t i = 0; i < banned.size(); ++i)
    checks.push_back(check("ban" + std::to_string(i), "static", "banned_pattern", {{"pattern", banned[i].first}}));
  Environment env;
  env.suite = parse_suite({{"name", "static-only"}, {"checks", checks}});
  env.session.runner_cmd = "false {source}";

  gen::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string text = "# candidate\n";
    int expected = 0;
    for (const auto& t : tokens) {
      if (gen::coin(rng, 0.6))
        text += t + " = 1\n";
      else
        ++expected;
    }
    for (const auto& [pattern, snippet] : banned)
      if (gen::coin(rng, 0.3)) text += snippet + "\n";
    for (const auto& [pattern, snippet] : banned)
      if (std::regex_search(text, std::regex(pattern))) ++expected;
    const DiagnosticReport r = run_suite({text}, env);
    ASSERT_EQ(r.failing_count(), expected) << text;
    ASSERT_EQ(r.passed(), expected == 0);
  }
}

TEST(Abort, BannedPatternTurnsLaterTiersIntoErrors) {
  Environment env = sample_env();
  env.session.runner_cmd = "false {source}";  // must never be spawned
  const DiagnosticReport r = run_suite({"import scipy\n" + reference()}, env);
  ASSERT_EQ(r.results.size(), env.suite.checks.size());
  for (std::size_t i = 0; i < r.results.size(); ++i) EXPECT_EQ(r.results[i].id, env.suite.checks[i].id);
  EXPECT_EQ(result(r, "hygiene_scipy").status, CheckStatus::kFail);
  for (const auto& c : r.results) {
    if (c.category == CheckCategory::kStaticContract) continue;
    EXPECT_EQ(c.status, CheckStatus::kError) << c.id;
    EXPECT_EQ(c.message, "Test setup aborted by hygiene_scipy.") << c.id;
  }
  EXPECT_TRUE(r.episodes.empty());
}

TEST(Abort, RequiredTokensDoNotAbortByDefault) {
  const auto s = parse_suite({{"name", "s"},
                              {"checks",
                               {check("tok", "static", "required_tokens", {{"tokens", {"NOPE"}}}),
                                check("occ", "unit", "occupancy", {{"samples", 4}})}}});
  Environment env = sample_env();
  env.suite = s;
  const DiagnosticReport r = run_suite({reference()}, env);
  EXPECT_EQ(result(r, "tok").status, CheckStatus::kFail);
  EXPECT_EQ(result(r, "occ").status, CheckStatus::kPass);
}

TEST(Suite, ReferenceControllerPasses) {
  const DiagnosticReport r = run_suite({reference()}, sample_env());
  EXPECT_TRUE(r.passed()) << summarize(r);
  EXPECT_EQ(summarize(r), "all checks passed");
  const CheckResult& success = result(r, "e2e_success");
  ASSERT_TRUE(success.measurements);
  EXPECT_TRUE(success.measurements->goal_reached);
  EXPECT_EQ(success.measurements->collisions, 0);
  EXPECT_FALSE(r.episodes.empty());
}

TEST(Mutation, InvertedOccupancyIsCaught) {
  const std::string text = replaced(reference(), "\"value\": grid.blocked(int(args[0]), int(args[1]))",
                                    "\"value\": not grid.blocked(int(args[0]), int(args[1]))");
  const auto r = run_suite({text}, sample_env());
  EXPECT_EQ(non_passing(r), (std::set<std::string>{"unit_occupancy"})) << summarize(r);
  EXPECT_EQ(result(r, "unit_occupancy").status, CheckStatus::kFail);
}

TEST(Mutation, NearestFreeEchoIsCaught) {
  const std::string text = replaced(reference(), "grid.nearest_free(int(args[0]), int(args[1]), int(args[2]))",
                                    "[int(args[0]), int(args[1])]");
  const auto r = run_suite({text}, sample_env());
  EXPECT_EQ(non_passing(r), (std::set<std::string>{"unit_nearest_free"})) << summarize(r);
}

TEST(Mutation, BrokenPlannerIsCaught) {
  const std::string text =
      replaced(reference(), "grid.plan(tuple(args[0]), tuple(args[1]))", "[args[0], args[1]]");
  const auto r = run_suite({text}, sample_env());
  EXPECT_EQ(non_passing(r), (std::set<std::string>{"unit_planner"})) << summarize(r);
}

TEST(Mutation, MissingQuerySupportIsFailNotCrash) {
  const std::string text = replaced(reference(), "elif op == \"plan_path\":", "elif op == \"plan_path_disabled\":");
  const auto r = run_suite({text}, sample_env());
  const CheckResult& c = result(r, "unit_planner");
  EXPECT_EQ(c.status, CheckStatus::kFail);
  EXPECT_NE(c.message.find("Required API missing"), std::string::npos) << c.message;
}

TEST(Mutation, StalledRobotFailsProgressAndSuccess) {
  const std::string text = replaced(reference(), "vl, vr = follower.act(msg[\"pose\"])", "vl, vr = 0.0, 0.0");
  const auto r = run_suite({text}, sample_env());
  EXPECT_EQ(non_passing(r), (std::set<std::string>{"e2e_progress", "e2e_success"})) << summarize(r);
  const CheckResult& p = result(r, "e2e_progress");
  EXPECT_EQ(p.status, CheckStatus::kFail);
  EXPECT_NE(p.message.find("No significant progress toward goal"), std::string::npos);
  EXPECT_NE(result(r, "e2e_success").message.find("Did not reach goal."), std::string::npos);
}

TEST(Mutation, CrashingControllerIsRuntimeError) {
  const std::string text = replaced(reference(), "vl, vr = follower.act(msg[\"pose\"])", "vl, vr = 1 / 0, 0");
  const auto r = run_suite({text}, sample_env());
  for (const std::string id : {"e2e_schema", "e2e_stability", "e2e_progress", "e2e_success"})
    EXPECT_NE(result(r, id).status, CheckStatus::kPass) << id;
  EXPECT_EQ(result(r, "unit_occupancy").status, CheckStatus::kPass);
}

TEST(Report, SummarizeNumbersNonPassingResults) {
  DiagnosticReport r;
  r.results.push_back({"a", CheckCategory::kStaticContract, CheckStatus::kPass, "ok", std::nullopt});
  r.results.push_back({"b", CheckCategory::kUnitApi, CheckStatus::kFail, "bad thing.", std::nullopt});
  r.results.push_back({"c", CheckCategory::kEndToEnd, CheckStatus::kError, "worse thing.", std::nullopt});
  EXPECT_EQ(summarize(r), "1. bad thing. [b: fail]\n2. worse thing. [c: error]\n");
  EXPECT_EQ(r.failing_count(), 2);
}

TEST(Report, JsonRoundTrip) {
  DiagnosticReport r;
  Measurements m;
  m.d0 = 222.4;
  m.d_min = 209.6;
  m.collisions = 3;
  m.steps_used = 400;
  r.results.push_back({"p", CheckCategory::kEndToEnd, CheckStatus::kFail, "slow", m});
  r.results.push_back({"s", CheckCategory::kStaticContract, CheckStatus::kPass, "ok", std::nullopt});
  const json j = to_json(r);
  const DiagnosticReport back = report_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.results[0].measurements->collisions, 3);
  EXPECT_FALSE(back.results[1].measurements);
}
