#include "gridpilot/verify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "gridpilot/occgrid.hpp"

namespace gridpilot {

using json = nlohmann::json;

std::string_view to_string(CheckCategory c) {
  switch (c) {
    case CheckCategory::kStaticContract: return "static";
    case CheckCategory::kUnitApi: return "unit";
    case CheckCategory::kEndToEnd: return "e2e";
  }
  return "static";
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kError: return "error";
  }
  return "error";
}

namespace {

CheckCategory parse_category(const std::string& s) {
  if (s == "static") return CheckCategory::kStaticContract;
  if (s == "unit") return CheckCategory::kUnitApi;
  if (s == "e2e") return CheckCategory::kEndToEnd;
  throw std::invalid_argument("unknown check category '" + s + "'");
}

CheckStatus parse_status(const std::string& s) {
  if (s == "pass") return CheckStatus::kPass;
  if (s == "fail") return CheckStatus::kFail;
  if (s == "error") return CheckStatus::kError;
  throw std::invalid_argument("unknown check status '" + s + "'");
}

const std::map<CheckCategory, std::set<std::string>>& known_kinds() {
  static const std::map<CheckCategory, std::set<std::string>> kinds = {
      {CheckCategory::kStaticContract, {"required_tokens", "banned_pattern"}},
      {CheckCategory::kUnitApi, {"occupancy", "nearest_free", "planner"}},
      {CheckCategory::kEndToEnd, {"schema", "stability", "progress", "success"}},
  };
  return kinds;
}

}  // namespace

Suite parse_suite(const json& j) {
  Suite suite;
  suite.name = j.value("name", "suite");
  suite.seed = j.value("seed", 0);
  suite.overrides = j.value("overrides", json::object());
  std::set<std::string> ids;
  for (const json& c : j.at("checks")) {
    CheckSpec spec;
    spec.id = c.at("id").get<std::string>();
    spec.category = parse_category(c.at("category").get<std::string>());
    spec.kind = c.at("kind").get<std::string>();
    spec.description = c.value("description", "");
    spec.parameters = c.value("parameters", json::object());
    if (!known_kinds().at(spec.category).contains(spec.kind))
      throw std::invalid_argument(fmt::format("check '{}': unknown kind '{}' for category {}", spec.id, spec.kind,
                                              to_string(spec.category)));
    if (spec.kind == "banned_pattern") std::regex(spec.parameters.at("pattern").get<std::string>());
    if (!ids.insert(spec.id).second) throw std::invalid_argument("duplicate check id '" + spec.id + "'");
    suite.checks.push_back(std::move(spec));
  }
  if (suite.checks.empty()) throw std::invalid_argument("suite has no checks");
  return suite;
}

Suite load_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suite '" + path.string() + "'");
  return parse_suite(json::parse(in));
}

Measurements Measurements::from(const EpisodeLog& log) {
  return {log.d0, log.d_min, log.collisions, log.steps_used, log.final_distance, log.goal_reached};
}

int DiagnosticReport::failing_count() const {
  return static_cast<int>(std::count_if(results.begin(), results.end(),
                                        [](const CheckResult& r) { return r.status != CheckStatus::kPass; }));
}

std::string progress_failure_message(double d_min, double d0, double ratio) {
  return fmt::format("No significant progress toward goal ({:.1f} (d_min) ≥ {:g} × {:.1f} (d0)).", d_min, ratio,
                     d0);
}

std::string success_failure_message(const Measurements& m, double goal_tol) {
  if (!m.goal_reached)
    return fmt::format("Did not reach goal. (d_min={:.1f}, collision={}).", m.d_min, m.collisions);
  if (m.collisions > 0)
    return fmt::format("Reached goal with collisions (collisions={}, d_min={:.1f}).", m.collisions, m.d_min);
  return fmt::format("Final distance {:.1f} not below goal tolerance {:g}.", m.final_distance, goal_tol);
}

std::vector<CheckResult> run_static_checks(const CandidateSource& candidate, const std::vector<CheckSpec>& suite) {
  std::vector<CheckResult> out;
  for (const CheckSpec& spec : suite) {
    if (spec.category != CheckCategory::kStaticContract) continue;
    CheckResult r{spec.id, spec.category, CheckStatus::kPass, "ok", std::nullopt};
    if (spec.kind == "required_tokens") {
      const std::string tmpl = spec.parameters.value("message", "missing required constant {token}");
      std::vector<std::string> missing;
      for (const json& token : spec.parameters.at("tokens")) {
        const std::string t = token.get<std::string>();
        if (candidate.text.find(t) == std::string::npos) {
          std::string msg = tmpl;
          if (auto pos = msg.find("{token}"); pos != std::string::npos) msg.replace(pos, 7, t);
          missing.push_back(msg);
        }
      }
      if (!missing.empty()) {
        r.status = CheckStatus::kFail;
        r.message = fmt::format("{}", fmt::join(missing, "; "));
      }
    } else if (spec.kind == "banned_pattern") {
      const std::string pattern = spec.parameters.at("pattern").get<std::string>();
      if (std::regex_search(candidate.text, std::regex(pattern))) {
        r.status = CheckStatus::kFail;
        r.message = spec.parameters.value("message", fmt::format("Found banned pattern /{}/.", pattern));
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

CheckResult session_error_result(const CheckSpec& spec, const std::exception& e) {
  std::string kind = "error";
  if (const auto* se = dynamic_cast<const SessionError*>(&e)) kind = std::string(to_string(se->kind()));
  return {spec.id, spec.category, CheckStatus::kError, fmt::format("{}: {}", kind, e.what()), std::nullopt};
}

ControllerSession open_session(const CandidateSource& candidate, const Environment& env) {
  return ControllerSession::spawn(candidate, env.session, env.params, env.grid_path, env.suite.seed);
}

std::optional<Pixel> as_pixel(const json& v) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) return std::nullopt;
  return Pixel{v[0].get<int>(), v[1].get<int>()};
}

std::string fmt_pixel(Pixel p) { return fmt::format("({}, {})", p.x, p.y); }

CheckResult check_occupancy(ControllerSession& session, const Environment& env, const CheckSpec& spec) {
  const OccupancyGrid& grid = env.grid;
  const int samples = spec.parameters.value("samples", 48);
  std::mt19937 rng(static_cast<std::uint32_t>(env.suite.seed));
  std::vector<Pixel> obstacles;
  std::vector<Pixel> frees;
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x) (grid.occupied(x, y) ? obstacles : frees).push_back({x, y});

  std::vector<Pixel> probes;
  const auto sample_from = [&](const std::vector<Pixel>& pool, int count) {
    if (pool.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int i = 0; i < count; ++i) probes.push_back(pool[pick(rng)]);
  };
  sample_from(obstacles, samples / 2);
  sample_from(frees, samples - samples / 2);
  const int w = grid.width();
  const int h = grid.height();
  for (const Pixel p : {Pixel{-1, 0}, Pixel{0, -1}, Pixel{w, 0}, Pixel{0, h}, Pixel{w, h}, Pixel{-5, h / 2},
                        Pixel{w / 2, h + 5}, Pixel{w + 100, -100}})
    probes.push_back(p);

  std::vector<std::string> problems;
  for (const Pixel p : probes) {
    const json v = session.query("is_occupied", {p.x, p.y});
    const bool expected = grid.blocked(p.x, p.y);
    if (!v.is_boolean()) {
      problems.push_back(fmt::format("is_occupied{} returned {} instead of a boolean", fmt_pixel(p), v.dump()));
    } else if (v.get<bool>() != expected) {
      problems.push_back(fmt::format("is_occupied{} returned {}, expected {}{}", fmt_pixel(p), v.get<bool>(), expected,
                                     grid.contains(p) ? "" : " (out of bounds)"));
    }
    if (problems.size() >= 4) break;
  }
  if (problems.empty()) return {spec.id, spec.category, CheckStatus::kPass, "ok", std::nullopt};
  return {spec.id, spec.category, CheckStatus::kFail, fmt::format("Occupancy query mismatch: {}.", fmt::join(problems, "; ")),
          std::nullopt};
}

CheckResult check_nearest_free(ControllerSession& session, const Environment& env, const CheckSpec& spec) {
  const OccupancyGrid& grid = env.grid;
  const int samples = spec.parameters.value("samples", 8);
  const int max_rad = spec.parameters.value("max_rad", kSnapRadius);
  std::mt19937 rng(static_cast<std::uint32_t>(env.suite.seed) + 1u);

  std::vector<Pixel> reachable_obstacles;
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      if (grid.occupied(x, y) && nearest_free(grid, {x, y}, max_rad)) reachable_obstacles.push_back({x, y});

  std::vector<Pixel> probes{env.task.start, env.task.goal};
  if (!reachable_obstacles.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, reachable_obstacles.size() - 1);
    for (int i = 0; i < samples; ++i) probes.push_back(reachable_obstacles[pick(rng)]);
  }

  std::vector<std::string> problems;
  for (const Pixel p : probes) {
    if (!grid.contains(p) || !nearest_free(grid, p, max_rad)) continue;
    const json v = session.query("nearest_free", {p.x, p.y, max_rad});
    const auto q = as_pixel(v);
    if (!q) {
      problems.push_back(fmt::format("nearest_free{} returned {} instead of an integer pair", fmt_pixel(p), v.dump()));
    } else if (grid.blocked(q->x, q->y)) {
      problems.push_back(fmt::format("nearest_free{} returned occupied cell {}", fmt_pixel(p), fmt_pixel(*q)));
    } else if (std::max(std::abs(q->x - p.x), std::abs(q->y - p.y)) > max_rad) {
      problems.push_back(fmt::format("nearest_free{} returned {} beyond max_rad={}", fmt_pixel(p), fmt_pixel(*q), max_rad));
    }
    if (problems.size() >= 4) break;
  }
  if (problems.empty()) return {spec.id, spec.category, CheckStatus::kPass, "ok", std::nullopt};
  return {spec.id, spec.category, CheckStatus::kFail, fmt::format("nearest_free is wrong: {}.", fmt::join(problems, "; ")),
          std::nullopt};
}

// Empty string when `v` is a valid free-space path from a to b.
std::string validate_path(const json& v, const OccupancyGrid& grid, Pixel a, Pixel b) {
  if (!v.is_array() || v.empty()) return fmt::format("plan_path returned {} instead of a waypoint list", v.dump().substr(0, 80));
  std::vector<Pixel> pts;
  for (const json& item : v) {
    const auto p = as_pixel(item);
    if (!p) return fmt::format("waypoint {} is not an integer pair", item.dump());
    pts.push_back(*p);
  }
  if (pts.front() != a) return fmt::format("path starts at {} instead of {}", fmt_pixel(pts.front()), fmt_pixel(a));
  if (pts.back() != b) return fmt::format("path ends at {} instead of {}", fmt_pixel(pts.back()), fmt_pixel(b));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (grid.blocked(pts[i].x, pts[i].y)) return fmt::format("waypoint {} lies in an obstacle", fmt_pixel(pts[i]));
    if (i > 0 && std::max(std::abs(pts[i].x - pts[i - 1].x), std::abs(pts[i].y - pts[i - 1].y)) != 1)
      return fmt::format("waypoints {} and {} are not adjacent", fmt_pixel(pts[i - 1]), fmt_pixel(pts[i]));
  }
  return {};
}

CheckResult check_planner(ControllerSession& session, const Environment& env, const CheckSpec& spec) {
  const OccupancyGrid& grid = env.grid;
  const auto [a, b] = snap_task(grid, env.task);
  std::vector<std::string> problems;

  const json route = session.query("plan_path", {{a.x, a.y}, {b.x, b.y}});
  if (std::string why = validate_path(route, grid, a, b); !why.empty()) problems.push_back(why);

  // A pair in different free components must come back as "no path".
  const Raster<int> labels = free_components(grid);
  std::optional<Pixel> other;
  for (int y = 0; y < grid.height() && !other; ++y)
    for (int x = 0; x < grid.width() && !other; ++x)
      if (labels.at(x, y) >= 0 && labels.at(x, y) != labels.at(a)) other = Pixel{x, y};
  if (other) {
    const json v = session.query("plan_path", {{a.x, a.y}, {other->x, other->y}});
    const bool no_path = v.is_null() || (v.is_array() && v.empty());
    if (!no_path)
      problems.push_back(
          fmt::format("plan_path{}->{} crosses an obstacle boundary; expected no path", fmt_pixel(a), fmt_pixel(*other)));
  }
  if (problems.empty()) return {spec.id, spec.category, CheckStatus::kPass, "ok", std::nullopt};
  return {spec.id, spec.category, CheckStatus::kFail, fmt::format("Planner output invalid: {}.", fmt::join(problems, "; ")),
          std::nullopt};
}

}  // namespace

std::vector<CheckResult> run_unit_checks(const CandidateSource& candidate, const Environment& env,
                                         const std::vector<CheckSpec>& checks) {
  std::vector<CheckResult> out;
  for (const CheckSpec& spec : checks) {
    if (spec.category != CheckCategory::kUnitApi) continue;
    try {
      ControllerSession session = open_session(candidate, env);
      if (spec.kind == "occupancy") out.push_back(check_occupancy(session, env, spec));
      if (spec.kind == "nearest_free") out.push_back(check_nearest_free(session, env, spec));
      if (spec.kind == "planner") out.push_back(check_planner(session, env, spec));
      session.terminate();
    } catch (const SessionError& e) {
      if (e.kind() == SessionError::Kind::kQueryUnsupported) {
        out.push_back({spec.id, spec.category, CheckStatus::kFail, fmt::format("Required API missing: {}.", e.what()),
                       std::nullopt});
      } else {
        out.push_back(session_error_result(spec, e));
      }
    } catch (const std::exception& e) {
      out.push_back(session_error_result(spec, e));
    }
  }
  return out;
}

namespace {

EpisodeLog rollout(const CandidateSource& candidate, const Environment& env, int budget) {
  ControllerSession session = open_session(candidate, env);
  SessionController controller(session);
  EpisodeLog log = run_episode(env.grid, env.task, env.robot, controller, budget);
  session.terminate();
  return log;
}

std::string session_failure(const EpisodeLog& log) {
  return fmt::format("Runtime failure at step {}: {}", log.failure_step.value_or(0), log.failure.value_or("unknown"));
}

CheckResult evaluate_e2e(const CheckSpec& spec, const Environment& env, const EpisodeLog& log) {
  CheckResult r{spec.id, spec.category, CheckStatus::kPass, "ok", Measurements::from(log)};
  const TaskSpec& task = env.task;
  if (spec.kind == "schema") {
    if (log.failure) {
      r.status = CheckStatus::kFail;
      r.message = "Simulation log schema broken: " + session_failure(log);
      return r;
    }
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      const StepRecord& s = log.records[i];
      if (s.step != static_cast<int>(i) || !std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.v_l) ||
          !std::isfinite(s.v_r)) {
        r.status = CheckStatus::kFail;
        r.message = fmt::format("Simulation log schema broken at record {}.", i);
        return r;
      }
    }
    return r;
  }
  if (spec.kind == "stability") {
    if (log.failure) {
      r.status = CheckStatus::kFail;
      r.message = session_failure(log) + ".";
    }
    return r;
  }
  if (log.failure) {
    r.status = CheckStatus::kError;
    r.message = session_failure(log);
    return r;
  }
  if (spec.kind == "progress") {
    if (!(log.d_min <= task.progress_ratio * log.d0)) {
      r.status = CheckStatus::kFail;
      r.message = progress_failure_message(log.d_min, log.d0, task.progress_ratio);
    }
    return r;
  }
  // success
  if (!(log.goal_reached && log.collisions == 0 && log.final_distance < task.goal_tol)) {
    r.status = CheckStatus::kFail;
    r.message = success_failure_message(*r.measurements, task.goal_tol);
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_e2e_checks(const CandidateSource& candidate, const Environment& env,
                                        const std::vector<CheckSpec>& checks,
                                        std::map<std::string, EpisodeLog>* episodes) {
  std::vector<CheckResult> out;
  for (const CheckSpec& spec : checks) {
    if (spec.category != CheckCategory::kEndToEnd) continue;
    int budget = env.task.max_steps;
    if (spec.kind == "schema") budget = spec.parameters.value("steps", 50);
    if (spec.kind == "stability") budget = spec.parameters.value("steps", env.task.progress_window);
    if (spec.kind == "progress") budget = env.task.progress_window;
    budget = std::min(budget, env.task.max_steps);
    try {
      const EpisodeLog log = rollout(candidate, env, budget);
      out.push_back(evaluate_e2e(spec, env, log));
      if (episodes) (*episodes)[spec.id] = log;
    } catch (const std::exception& e) {
      out.push_back(session_error_result(spec, e));
    }
  }
  return out;
}

DiagnosticReport run_suite(const CandidateSource& candidate, const Environment& env) {
  const std::vector<CheckSpec>& checks = env.suite.checks;
  DiagnosticReport report;
  std::map<std::string, CheckResult> by_id;
  for (CheckResult& r : run_static_checks(candidate, checks)) by_id.emplace(r.id, std::move(r));

  std::optional<std::string> aborted_by;
  for (const CheckSpec& spec : checks) {
    if (spec.category != CheckCategory::kStaticContract || by_id.at(spec.id).status == CheckStatus::kPass) continue;
    if (spec.kind == "banned_pattern" ? spec.parameters.value("aborts", true) : spec.parameters.value("aborts", false)) {
      aborted_by = spec.id;
      break;
    }
  }

  if (aborted_by) {
    for (const CheckSpec& spec : checks) {
      if (spec.category == CheckCategory::kStaticContract) continue;
      by_id.emplace(spec.id, CheckResult{spec.id, spec.category, CheckStatus::kError,
                                         fmt::format("Test setup aborted by {}.", *aborted_by), std::nullopt});
    }
  } else {
    for (CheckResult& r : run_unit_checks(candidate, env, checks)) by_id.emplace(r.id, std::move(r));
    for (CheckResult& r : run_e2e_checks(candidate, env, checks, &report.episodes)) by_id.emplace(r.id, std::move(r));
  }

  for (const CheckSpec& spec : checks) report.results.push_back(by_id.at(spec.id));
  return report;
}

std::string summarize(const DiagnosticReport& report) {
  std::ostringstream out;
  int n = 0;
  for (const CheckResult& r : report.results) {
    if (r.status == CheckStatus::kPass) continue;
    out << ++n << ". " << r.message << " [" << r.id << ": " << to_string(r.status) << "]\n";
  }
  return n == 0 ? "all checks passed" : out.str();
}

namespace {

json to_json(const Measurements& m) {
  return {{"d0", m.d0},
          {"d_min", m.d_min},
          {"collisions", m.collisions},
          {"steps_used", m.steps_used},
          {"final_distance", m.final_distance},
          {"goal_reached", m.goal_reached}};
}

Measurements measurements_from_json(const json& j) {
  Measurements m;
  m.d0 = j.value("d0", 0.0);
  m.d_min = j.value("d_min", 0.0);
  m.collisions = j.value("collisions", 0);
  m.steps_used = j.value("steps_used", 0);
  m.final_distance = j.value("final_distance", 0.0);
  m.goal_reached = j.value("goal_reached", false);
  return m;
}

}  // namespace

json to_json(const DiagnosticReport& report) {
  json results = json::array();
  for (const CheckResult& r : report.results) {
    json item = {{"id", r.id},
                 {"category", to_string(r.category)},
                 {"status", to_string(r.status)},
                 {"message", r.message}};
    if (r.measurements) item["measurements"] = to_json(*r.measurements);
    results.push_back(std::move(item));
  }
  return {{"passed", report.passed()}, {"failing_count", report.failing_count()}, {"results", std::move(results)}};
}

DiagnosticReport report_from_json(const json& j) {
  DiagnosticReport report;
  for (const json& item : j.at("results")) {
    CheckResult r;
    r.id = item.at("id").get<std::string>();
    r.category = parse_category(item.value("category", "static"));
    r.status = parse_status(item.at("status").get<std::string>());
    r.message = item.value("message", "");
    if (item.contains("measurements")) r.measurements = measurements_from_json(item["measurements"]);
    report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace gridpilot
