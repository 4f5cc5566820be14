#include "gridpilot/records.hpp"

#include <stdexcept>
#include <string>

namespace gridpilot {

using json = nlohmann::json;

std::string_view to_string(Action a) {
  switch (a) {
    case Action::kGenerate: return "generate";
    case Action::kTest: return "test";
    case Action::kEdit: return "edit";
    case Action::kUpdateRules: return "update_rules";
  }
  return "generate";
}

Action parse_action(std::string_view s) {
  if (s == "generate") return Action::kGenerate;
  if (s == "test") return Action::kTest;
  if (s == "edit") return Action::kEdit;
  if (s == "update_rules") return Action::kUpdateRules;
  throw std::invalid_argument("unknown action '" + std::string(s) + "'");
}

int action_ordinal(Action a) {
  switch (a) {
    case Action::kGenerate: return 0;
    case Action::kTest: return 1;
    case Action::kEdit: return 2;
    case Action::kUpdateRules: return 3;
  }
  return 0;
}

json to_json(const IterationRecord& r) {
  json j = {{"run", r.run},
            {"k", r.iteration},
            {"j", r.edit},
            {"action", std::string(to_string(r.action))},
            {"ok", r.ok},
            {"metadata", r.metadata}};
  if (r.failing) {
    j["f"] = *r.failing;
    j["s"] = r.success() ? 1 : 0;
  }
  if (r.time) j["time"] = *r.time;
  return j;
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.run = j.at("run").get<int>();
  r.iteration = j.at("k").get<int>();
  r.edit = j.at("j").get<int>();
  r.action = parse_action(j.at("action").get<std::string>());
  r.ok = j.value("ok", true);
  if (j.contains("f") && !j["f"].is_null()) r.failing = j["f"].get<int>();
  if (j.contains("s") && r.failing && (j["s"].get<int>() == 1) != r.success())
    throw std::invalid_argument("record has s inconsistent with f");
  if (j.contains("time")) r.time = j["time"].get<std::string>();
  r.metadata = j.value("metadata", json::object());
  return r;
}

}  // namespace gridpilot
