#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridpilot/backend.hpp"
#include "gridpilot/harness.hpp"
#include "gridpilot/prompt.hpp"
#include "gridpilot/records.hpp"
#include "gridpilot/verify.hpp"

namespace gridpilot {

struct LoopConfig {
  int K = 20;  ///< iteration budget
  int J = 1;   ///< edit patience
  int run = 1;
  int seed = 0;

  void validate() const;
};

using Verifier = std::function<DiagnosticReport(const CandidateSource&)>;

/// Optional observers; none of them can alter the loop.
struct SynthesisHooks {
  std::function<void(const IterationRecord&)> on_record;
  std::function<void(const CandidateSource&)> on_candidate;
  std::function<void(const CandidateSource&, const DiagnosticReport&)> on_report;
  std::function<void(int k, const PromptTemplate&)> on_rules_update;
  /// Timestamp source; records carry no time when unset.
  std::function<std::string()> clock;
};

struct SynthesisOutcome {
  std::optional<CandidateSource> verified;
  std::vector<IterationRecord> records;
  PromptTemplate final_template;
  std::optional<int> tau;  ///< iteration of the passing candidate
  int suite_runs = 0;

  bool budget_exhausted() const { return !verified.has_value(); }
};

/// Generate / test / edit / rules-update loop. Exhausting the budget is not an
/// exception: the outcome comes back with no verified candidate and full records.
/// BackendError from the backend propagates.
SynthesisOutcome synthesize(const LoopConfig& cfg, const PromptTemplate& tmpl, const EnvContext& ctx,
                            Backend& backend, const Verifier& verify, const SynthesisHooks& hooks = {});

/// Verifier bound to an environment via run_suite.
Verifier suite_verifier(const Environment& env);

}  // namespace gridpilot
