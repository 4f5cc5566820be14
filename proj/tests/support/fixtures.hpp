#pragma once

#include <string>
#include <vector>

#include "gridpilot/records.hpp"
#include "gridpilot/verify.hpp"

namespace fixtures {

/// Five runs over k = 1..4 plus one unusable generation. First successes are
/// 1, 3, never, 2, 3; 9 of the 20 valid pairs end on a passing test.
inline std::vector<gridpilot::IterationRecord> metrics_example() {
  using gridpilot::Action;
  using gridpilot::IterationRecord;
  std::vector<IterationRecord> out;
  const auto gen = [&](int r, int k, bool ok = true) {
    IterationRecord rec;
    rec.run = r;
    rec.iteration = k;
    rec.action = Action::kGenerate;
    rec.ok = ok;
    out.push_back(rec);
  };
  const auto test = [&](int r, int k, int j, int f) {
    IterationRecord rec;
    rec.run = r;
    rec.iteration = k;
    rec.edit = j;
    rec.action = Action::kTest;
    rec.failing = f;
    out.push_back(rec);
  };
  const auto edit = [&](int r, int k, int j) {
    IterationRecord rec;
    rec.run = r;
    rec.iteration = k;
    rec.edit = j;
    rec.action = Action::kEdit;
    out.push_back(rec);
  };
  const auto rules = [&](int r, int k, int j) {
    IterationRecord rec;
    rec.run = r;
    rec.iteration = k;
    rec.edit = j;
    rec.action = Action::kUpdateRules;
    out.push_back(rec);
  };

  // pass[r][k]: final outcome of each iteration.
  const bool pass[5][4] = {{true, true, true, true},
                           {false, false, true, true},
                           {false, false, false, false},
                           {false, true, false, true},
                           {false, false, true, false}};
  for (int r = 1; r <= 5; ++r)
    for (int k = 1; k <= 4; ++k) {
      gen(r, k);
      if (pass[r - 1][k - 1] && (r + k) % 2 == 0) {
        test(r, k, 0, 0);
      } else if (pass[r - 1][k - 1]) {
        test(r, k, 0, 2);
        edit(r, k, 0);
        test(r, k, 1, 0);
      } else {
        test(r, k, 0, 3);
        edit(r, k, 0);
        test(r, k, 1, 1);
        rules(r, k, 1);
      }
    }
  // Unusable generation: its pair is not valid even though it was tested.
  gen(3, 5, false);
  test(3, 5, 0, 4);
  return out;
}

/// Report with the four failure items of the repair example: two rollout
/// failures followed by two aborting hygiene findings.
inline gridpilot::DiagnosticReport repair_example_report() {
  using namespace gridpilot;
  DiagnosticReport r;
  Measurements progress;
  progress.d0 = 222.4;
  progress.d_min = 209.6;
  Measurements success = progress;
  success.d_min = 199.9;
  success.collisions = 0;
  success.goal_reached = false;
  r.results.push_back({"static_constants", CheckCategory::kStaticContract, CheckStatus::kPass, "ok", std::nullopt});
  r.results.push_back({"e2e_progress", CheckCategory::kEndToEnd, CheckStatus::kFail,
                       progress_failure_message(progress.d_min, progress.d0, 0.7), progress});
  r.results.push_back({"e2e_success", CheckCategory::kEndToEnd, CheckStatus::kFail,
                       success_failure_message(success, 20.0), success});
  r.results.push_back({"hygiene_scipy", CheckCategory::kStaticContract, CheckStatus::kFail,
                       "Found forbidden scipy library dependency. Test setup aborted.", std::nullopt});
  r.results.push_back({"hygiene_runtime_error", CheckCategory::kStaticContract, CheckStatus::kFail,
                       "Script contains prohibited Runtime Error raising. Test setup aborted.", std::nullopt});
  return r;
}

/// The four items as they read once the trailing "[id: status]" tag is removed.
inline const std::vector<std::string>& repair_example_lines() {
  static const std::vector<std::string> lines{
      "1. No significant progress toward goal (209.6 (d_min) ≥ 0.7 × 222.4 (d0)).",
      "2. Did not reach goal. (d_min=199.9, collision=0).",
      "3. Found forbidden scipy library dependency. Test setup aborted.",
      "4. Script contains prohibited Runtime Error raising. Test setup aborted.",
  };
  return lines;
}

}  // namespace fixtures
