#include "gridpilot/agent.hpp"

#include <stdexcept>

namespace gridpilot {

using json = nlohmann::json;

void LoopConfig::validate() const {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  if (J < 0) throw std::invalid_argument("J must be non-negative");
}

namespace {

class Recorder {
 public:
  Recorder(const LoopConfig& cfg, const SynthesisHooks& hooks, std::vector<IterationRecord>& out)
      : cfg_(cfg), hooks_(hooks), out_(out) {}

  void add(int k, int j, Action action, bool ok, std::optional<int> failing, json metadata) {
    IterationRecord r;
    r.run = cfg_.run;
    r.iteration = k;
    r.edit = j;
    r.action = action;
    r.ok = ok;
    r.failing = failing;
    r.metadata = std::move(metadata);
    if (hooks_.clock) r.time = hooks_.clock();
    out_.push_back(r);
    if (hooks_.on_record) hooks_.on_record(out_.back());
  }

 private:
  const LoopConfig& cfg_;
  const SynthesisHooks& hooks_;
  std::vector<IterationRecord>& out_;
};

CandidateSource make_candidate(const BackendReply& reply, CandidateSource::Origin origin, int run, int k, int j) {
  CandidateSource c;
  c.text = extract_code(reply.text);
  c.origin = origin;
  c.run = run;
  c.iteration = k;
  c.edit = j;
  return c;
}

bool usable(const CandidateSource& c) { return c.text.find_first_not_of(" \t\r\n") != std::string::npos; }

}  // namespace

SynthesisOutcome synthesize(const LoopConfig& cfg, const PromptTemplate& tmpl, const EnvContext& ctx,
                            Backend& backend, const Verifier& verify, const SynthesisHooks& hooks) {
  cfg.validate();
  SynthesisOutcome outcome{std::nullopt, {}, tmpl, std::nullopt, 0};
  Recorder rec(cfg, hooks, outcome.records);

  PromptTemplate pi = tmpl;
  std::string prompt = render_prompt(pi, ctx);

  for (int k = 1; k <= cfg.K; ++k) {
    const BackendReply gen = backend.generate(prompt);
    CandidateSource cand = make_candidate(gen, CandidateSource::Origin::kGenerated, cfg.run, k, 0);
    rec.add(k, 0, Action::kGenerate, usable(cand), std::nullopt, gen.metadata);
    if (hooks.on_candidate) hooks.on_candidate(cand);

    for (int j = 0; j <= cfg.J; ++j) {
      const DiagnosticReport report = verify(cand);
      ++outcome.suite_runs;
      if (hooks.on_report) hooks.on_report(cand, report);
      const std::string summary = summarize(report);
      rec.add(k, j, Action::kTest, true, report.failing_count(), {{"summary", summary}});

      if (report.passed()) {
        outcome.verified = cand;
        outcome.tau = k;
        outcome.final_template = pi;
        return outcome;
      }
      if (j < cfg.J) {
        const BackendReply ed = backend.edit(cand.text, summary);
        cand = make_candidate(ed, CandidateSource::Origin::kEdited, cfg.run, k, j + 1);
        rec.add(k, j, Action::kEdit, usable(cand), std::nullopt, ed.metadata);
        if (hooks.on_candidate) hooks.on_candidate(cand);
      } else {
        // Runs on k = K too, even though the new prompt is never used.
        const BackendReply upd = backend.update_rules(pi.rules(), summary);
        pi = pi.with_rules(upd.text);
        rec.add(k, j, Action::kUpdateRules, true, std::nullopt, upd.metadata);
        if (hooks.on_rules_update) hooks.on_rules_update(k, pi);
        prompt = render_prompt(pi, ctx);
      }
    }
  }
  outcome.final_template = pi;
  return outcome;
}

Verifier suite_verifier(const Environment& env) {
  return [&env](const CandidateSource& c) { return run_suite(c, env); };
}

}  // namespace gridpilot
