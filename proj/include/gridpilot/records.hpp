#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gridpilot {

enum class Action { kGenerate, kTest, kEdit, kUpdateRules };

std::string_view to_string(Action a);
Action parse_action(std::string_view s);

/// Position of an action inside one (run, iteration, edit) slot. An edit at
/// slot j produces the candidate tested at slot j + 1.
int action_ordinal(Action a);

/// One event of a synthesis run.
struct IterationRecord {
  int run = 1;
  int iteration = 1;             ///< k
  int edit = 0;                  ///< j
  Action action = Action::kGenerate;
  std::optional<int> failing;    ///< f, test records only
  bool ok = true;                ///< false when the backend call produced no usable candidate
  std::optional<std::string> time;
  nlohmann::json metadata = nlohmann::json::object();

  /// s = 1{f = 0}; only meaningful on test records.
  bool success() const { return failing && *failing == 0; }
};

nlohmann::json to_json(const IterationRecord& r);
IterationRecord record_from_json(const nlohmann::json& j);

}  // namespace gridpilot
