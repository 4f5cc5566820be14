// gridpilot command-line entry point.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "gridpilot/agent.hpp"
#include "gridpilot/harness.hpp"
#include "gridpilot/mapopt.hpp"
#include "gridpilot/occgrid.hpp"
#include "gridpilot/params.hpp"
#include "gridpilot/png_io.hpp"
#include "gridpilot/runner.hpp"
#include "gridpilot/sim2d.hpp"
#include "gridpilot/verify.hpp"

namespace fs = std::filesystem;
using namespace gridpilot;
using json = nlohmann::json;

namespace {

Pixel parse_xy(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("expected X,Y but got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("expected X,Y but got '" + s + "'");
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CandidateSource candidate_from_file(const fs::path& p) {
  CandidateSource c;
  c.text = read_file(p);
  if (p.has_extension()) c.extension = p.extension().string();
  return c;
}

struct PreprocessArgs {
  std::string map, start, goal, out;
  double goal_tol = 20.0;
  int max_steps = 2500;
  unsigned jobs = 1;
};

int cmd_preprocess(const PreprocessArgs& a) {
  TaskSpec task;
  task.start = parse_xy(a.start);
  task.goal = parse_xy(a.goal);
  task.goal_tol = a.goal_tol;
  task.max_steps = a.max_steps;
  task.progress_window = std::min(task.progress_window, task.max_steps);

  const GrayImage gray = to_grayscale(read_png(a.map));
  const Selection sel = select_best(gray, task, kDefaultClearanceCap, a.jobs);

  fs::create_directories(a.out);
  write_grid_png(fs::path(a.out) / "occupancy.png", sel.grid);
  MapParams p;
  p.width = sel.grid.width();
  p.height = sel.grid.height();
  p.threshold = sel.params.threshold;
  p.polarity = sel.params.polarity;
  p.inflate_px = sel.params.inflate;
  p.cleanup = sel.params.cleanup;
  p.start = task.start;
  p.goal = task.goal;
  p.goal_tol_px = task.goal_tol;
  p.max_steps = task.max_steps;
  save_params(fs::path(a.out) / "params.json", p);

  fmt::print("threshold={} polarity={} inflate={} cleanup={} clearance={:.3f} length={:.3f} sharpness={} score={:.4f}\n",
             p.threshold, to_string(p.polarity), p.inflate_px, p.cleanup, sel.breakdown.min_clearance,
             sel.breakdown.path_length, sel.breakdown.sharpness, sel.breakdown.score);
  return 0;
}

struct SimulateArgs {
  std::string params, grid, controller_cmd, candidate, suite, log, png;
  int seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const json params_json = json::parse(read_file(a.params));
  const MapParams params = params_from_json(params_json);
  const OccupancyGrid grid = read_grid_png(a.grid);
  TaskSpec task = params.task();
  RobotConfig robot = params.robot();
  if (!a.suite.empty()) {
    const json& o = load_suite(a.suite).overrides;
    robot.theta0 = o.value("theta0", robot.theta0);
    robot.body_radius = o.value("body_radius", robot.body_radius);
    task.progress_window = o.value("progress_window", task.progress_window);
    task.progress_ratio = o.value("progress_ratio", task.progress_ratio);
  }

  SessionOptions opts;
  opts.runner_cmd = a.controller_cmd;
  CandidateSource cand = a.candidate.empty() ? CandidateSource{} : candidate_from_file(a.candidate);
  ControllerSession session = ControllerSession::spawn(cand, opts, params_json, fs::absolute(a.grid), a.seed);
  SessionController ctrl(session);
  const EpisodeLog log = run_episode(grid, task, robot, ctrl);
  session.terminate();

  const std::string text = episode_log_text(log);
  if (a.log.empty()) {
    std::cout << text;
  } else {
    std::ofstream(a.log, std::ios::binary) << text;
  }
  if (!a.png.empty()) export_trajectory(grid, log, a.png);
  std::cerr << fmt::format("steps={} collisions={} d0={:.1f} d_min={:.1f} final={:.1f} goal_reached={}\n",
                           log.steps_used, log.collisions, log.d0, log.d_min, log.final_distance, log.goal_reached);
  if (log.failure) std::cerr << "failure: " << *log.failure << "\n";
  return log.goal_reached && log.collisions == 0 ? 0 : 1;
}

struct VerifyArgs {
  std::string params, grid, suite, candidate, runner_cmd = "python3 {source}", report;
  std::optional<int> seed;
};

int cmd_verify(const VerifyArgs& a) {
  SessionOptions opts;
  opts.runner_cmd = a.runner_cmd;
  Environment env = load_environment(a.params, a.grid, a.suite, opts);
  if (a.seed) env.suite.seed = *a.seed;
  const DiagnosticReport report = run_suite(candidate_from_file(a.candidate), env);
  const std::string summary = summarize(report);
  if (!a.report.empty()) {
    std::ofstream(a.report, std::ios::binary) << to_json(report).dump(2) << "\n";
    fs::path txt = a.report;
    txt.replace_extension(".txt");
    std::ofstream(txt, std::ios::binary) << summary << "\n";
  }
  for (const CheckResult& r : report.results)
    fmt::print("{:<24} {:<6} {}\n", r.id, to_string(r.status), r.status == CheckStatus::kPass ? "" : r.message);
  fmt::print("\n{}\n", summary);
  return report.passed() ? 0 : 1;
}

int cmd_synthesize(const std::string& config_path) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const ExperimentResult result = run_experiment(cfg);
  int verified = 0;
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const SynthesisOutcome& o = result.runs[i];
    if (o.verified) {
      ++verified;
      fmt::print("run {}: verified at k={} ({} suite runs)\n", i + 1, *o.tau, o.suite_runs);
    } else {
      fmt::print("run {}: budget exhausted after {} suite runs\n", i + 1, o.suite_runs);
    }
  }
  std::cout << metrics_table(result.metrics);
  return verified == cfg.runs ? 0 : 2;
}

int cmd_metrics(const std::string& dir, int runs, int K) {
  const auto records = load_records(dir);
  const fs::path manifest = fs::path(dir) / "experiment.json";
  if (fs::exists(manifest)) {
    const json m = json::parse(read_file(manifest));
    if (runs <= 0) runs = m.value("runs", 0);
    if (K <= 0) K = m.value("K", 0);
  }
  for (const auto& r : records) {
    if (runs <= 0 || r.run > runs) runs = std::max(runs, r.run);
    if (K <= 0 || r.iteration > K) K = std::max(K, r.iteration);
  }
  if (runs <= 0 || K <= 0) throw std::runtime_error("no records under '" + dir + "'");
  std::cout << metrics_table(compute_metrics(records, runs, K));
  return 0;
}

int cmd_render(const std::string& log_path, const std::string& out, const std::string& grid_path) {
  std::ifstream in(log_path);
  if (!in) throw IoError("cannot open '" + log_path + "'");
  const EpisodeLog log = read_episode_log(in);
  OccupancyGrid grid;
  if (!grid_path.empty()) {
    grid = read_grid_png(grid_path);
  } else {
    int w = std::max(log.start.x, log.goal.x), h = std::max(log.start.y, log.goal.y);
    for (const StepRecord& r : log.records) {
      w = std::max(w, static_cast<int>(std::ceil(r.x)));
      h = std::max(h, static_cast<int>(std::ceil(r.y)));
    }
    grid = OccupancyGrid(w + 8, h + 8);
  }
  export_trajectory(grid, log, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map preprocessing, simulation, verification and controller synthesis for 2-D navigation"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* sc_pre = app.add_subcommand("preprocess", "Select threshold and morphology for a map image");
  sc_pre->add_option("map", pre.map, "Input map PNG")->required()->check(CLI::ExistingFile);
  sc_pre->add_option("--start", pre.start, "Start cell X,Y")->required();
  sc_pre->add_option("--goal", pre.goal, "Goal cell X,Y")->required();
  sc_pre->add_option("--out", pre.out, "Output directory")->required();
  sc_pre->add_option("--goal-tol", pre.goal_tol, "Goal tolerance in px");
  sc_pre->add_option("--max-steps", pre.max_steps, "Episode step budget");
  sc_pre->add_option("--jobs", pre.jobs, "Worker threads for candidate scoring");

  SimulateArgs sim;
  auto* sc_sim = app.add_subcommand("simulate", "Run one episode with an external controller");
  sc_sim->add_option("--params", sim.params, "params.json")->required()->check(CLI::ExistingFile);
  sc_sim->add_option("--grid", sim.grid, "Occupancy PNG")->required()->check(CLI::ExistingFile);
  sc_sim->add_option("--controller-cmd", sim.controller_cmd, "Command template containing {source}")->required();
  sc_sim->add_option("--candidate", sim.candidate, "Controller source file")->check(CLI::ExistingFile);
  sc_sim->add_option("--suite", sim.suite, "Suite config for theta0/body_radius overrides")->check(CLI::ExistingFile);
  sc_sim->add_option("--log", sim.log, "Episode log output (default stdout)");
  sc_sim->add_option("--png", sim.png, "Trajectory image output");
  sc_sim->add_option("--seed", sim.seed, "Seed forwarded to the controller");

  VerifyArgs ver;
  auto* sc_ver = app.add_subcommand("verify", "Run the test suite against a controller");
  sc_ver->add_option("--params", ver.params, "params.json")->required()->check(CLI::ExistingFile);
  sc_ver->add_option("--grid", ver.grid, "Occupancy PNG")->required()->check(CLI::ExistingFile);
  sc_ver->add_option("--suite", ver.suite, "Suite config")->required()->check(CLI::ExistingFile);
  sc_ver->add_option("--candidate", ver.candidate, "Controller source file")->required()->check(CLI::ExistingFile);
  sc_ver->add_option("--runner-cmd", ver.runner_cmd, "Command template containing {source}");
  sc_ver->add_option("--report", ver.report, "Report JSON output; the summary goes next to it as .txt");
  sc_ver->add_option("--seed", ver.seed, "Override the suite seed");

  std::string config;
  auto* sc_syn = app.add_subcommand("synthesize", "Run the generate/test/repair loop");
  sc_syn->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);

  std::string records_dir;
  int runs = 0, K = 0;
  auto* sc_met = app.add_subcommand("metrics", "SR and CS table from persisted records");
  sc_met->add_option("--records", records_dir, "Experiment output directory")->required()->check(CLI::ExistingDirectory);
  sc_met->add_option("--runs", runs, "Run count R (default from experiment.json or records)");
  sc_met->add_option("--K", K, "Iteration budget K (default from experiment.json or records)");

  std::string log_path, png_out, grid_path;
  auto* sc_ren = app.add_subcommand("render", "Draw an episode log over its grid");
  sc_ren->add_option("--log", log_path, "Episode log")->required()->check(CLI::ExistingFile);
  sc_ren->add_option("--out", png_out, "Output PNG")->required();
  sc_ren->add_option("--grid", grid_path, "Occupancy PNG (blank canvas when omitted)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc_pre) return cmd_preprocess(pre);
    if (*sc_sim) return cmd_simulate(sim);
    if (*sc_ver) return cmd_verify(ver);
    if (*sc_syn) return cmd_synthesize(config);
    if (*sc_met) return cmd_metrics(records_dir, runs, K);
    if (*sc_ren) return cmd_render(log_path, png_out, grid_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
