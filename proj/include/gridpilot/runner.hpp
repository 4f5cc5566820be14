#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridpilot/agent.hpp"
#include "gridpilot/grid.hpp"
#include "gridpilot/records.hpp"
#include "gridpilot/sim2d.hpp"
#include "gridpilot/verify.hpp"

namespace gridpilot {

class InconsistentRecords : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunMetrics {
  int R = 0;
  int K = 0;
  std::vector<std::optional<int>> tau;  ///< per run; nullopt means never succeeded
  int valid_pairs = 0;
  int passing_pairs = 0;
  double SR = 0.0;
  std::vector<double> CS;  ///< CS[k - 1] for k = 1..K

  double cs(int k) const { return CS.at(static_cast<std::size_t>(k - 1)); }
};

/// Valid pairs are (r, k) with a usable generated candidate; the outcome of a
/// pair is its last test record. Record order does not matter.
RunMetrics compute_metrics(const std::vector<IterationRecord>& records, int R, int K);

/// k, CS(k) rows preceded by SR, tau and counts as comment lines.
std::string metrics_table(const RunMetrics& m);

/// White free space, black obstacles, red path, green start, blue goal.
ColorImage render_trajectory(const OccupancyGrid& grid, const EpisodeLog& log);
void export_trajectory(const OccupancyGrid& grid, const EpisodeLog& log, const std::filesystem::path& out);

/// Grid + params.json + suite, with suite overrides applied to task and robot.
Environment load_environment(const std::filesystem::path& params_path, const std::filesystem::path& grid_path,
                             const std::filesystem::path& suite_path, const SessionOptions& session = {});

EnvContext make_env_context(const Environment& env, const std::filesystem::path& params_path,
                            std::map<std::string, std::string> aux = {});

struct ExperimentConfig {
  int runs = 1;
  int K = 20;
  int J = 1;
  std::optional<int> seed;  ///< replaces the suite seed when set
  std::filesystem::path grid;
  std::filesystem::path params;
  std::filesystem::path suite;
  std::string runner_cmd = "python3 {source}";
  std::filesystem::path prompt_template;
  std::map<std::string, std::filesystem::path> aux_texts;  ///< placeholder name -> file
  nlohmann::json backend;
  std::filesystem::path out_dir;
  bool wall_clock = false;
  unsigned parallelism = 1;
  std::filesystem::path base_dir;  ///< for resolving relative fixture paths
};

/// Relative paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<SynthesisOutcome> runs;
  RunMetrics metrics;
};

/// Runs r = 1..runs and persists, under out_dir:
///   run_NNN/records.jsonl, run_NNN/kKK_jJ<ext>, run_NNN/kKK_jJ.report.json,
///   run_NNN/prompt_final.txt, run_NNN/controller<ext> (when verified), metrics.csv
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<IterationRecord> read_records(const std::filesystem::path& jsonl);
/// All run_*/records.jsonl under dir, in run order.
std::vector<IterationRecord> load_records(const std::filesystem::path& dir);

}  // namespace gridpilot
