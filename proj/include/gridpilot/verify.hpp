#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridpilot/harness.hpp"
#include "gridpilot/mapopt.hpp"
#include "gridpilot/sim2d.hpp"

namespace gridpilot {

enum class CheckCategory { kStaticContract, kUnitApi, kEndToEnd };
enum class CheckStatus { kPass, kFail, kError };

std::string_view to_string(CheckCategory c);
std::string_view to_string(CheckStatus s);

/// One configured check. `kind` selects the behaviour inside its category:
///   static:  required_tokens {tokens, message?}, banned_pattern {pattern, message?, aborts?}
///   unit:    occupancy {samples}, nearest_free {samples, max_rad}, planner {}
///   e2e:     schema {steps}, stability {steps?}, progress {}, success {}
struct CheckSpec {
  std::string id;
  CheckCategory category = CheckCategory::kStaticContract;
  std::string kind;
  std::string description;
  nlohmann::json parameters = nlohmann::json::object();
};

struct Suite {
  std::string name;
  int seed = 0;
  std::vector<CheckSpec> checks;
  /// Task and robot fields the suite overrides on top of params.json
  /// (progress_window, progress_ratio, theta0, body_radius).
  nlohmann::json overrides = nlohmann::json::object();
};

Suite parse_suite(const nlohmann::json& j);
Suite load_suite(const std::filesystem::path& path);

struct Measurements {
  double d0 = 0.0;
  double d_min = 0.0;
  int collisions = 0;
  int steps_used = 0;
  double final_distance = 0.0;
  bool goal_reached = false;

  static Measurements from(const EpisodeLog& log);
};

struct CheckResult {
  std::string id;
  CheckCategory category = CheckCategory::kStaticContract;
  CheckStatus status = CheckStatus::kPass;
  std::string message;
  std::optional<Measurements> measurements;
};

struct DiagnosticReport {
  std::vector<CheckResult> results;
  std::map<std::string, EpisodeLog> episodes;  ///< rollout logs keyed by check id

  int failing_count() const;
  bool passed() const { return failing_count() == 0; }
};

/// Everything a suite run needs besides the candidate.
struct Environment {
  OccupancyGrid grid;
  std::filesystem::path grid_path;
  nlohmann::json params;  ///< forwarded verbatim in the init message
  TaskSpec task;
  RobotConfig robot;
  Suite suite;
  SessionOptions session;
};

// Diagnostic phrasings shared by the checks and by report fixtures.
std::string progress_failure_message(double d_min, double d0, double ratio);
std::string success_failure_message(const Measurements& m, double goal_tol);

std::vector<CheckResult> run_static_checks(const CandidateSource& candidate, const std::vector<CheckSpec>& suite);
std::vector<CheckResult> run_unit_checks(const CandidateSource& candidate, const Environment& env,
                                         const std::vector<CheckSpec>& checks);
std::vector<CheckResult> run_e2e_checks(const CandidateSource& candidate, const Environment& env,
                                        const std::vector<CheckSpec>& checks,
                                        std::map<std::string, EpisodeLog>* episodes = nullptr);

/// Static, unit, then end-to-end. A failed aborting static check turns every
/// later-tier check into an error without running it. Results keep suite order.
DiagnosticReport run_suite(const CandidateSource& candidate, const Environment& env);

/// Numbered list of non-pass results in report order, or "all checks passed".
std::string summarize(const DiagnosticReport& report);

nlohmann::json to_json(const DiagnosticReport& report);
DiagnosticReport report_from_json(const nlohmann::json& j);

}  // namespace gridpilot
