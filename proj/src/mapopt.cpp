#include "gridpilot/mapopt.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "gridpilot/planner.hpp"

namespace gridpilot {

bool ScoreBreakdown::feasible() const { return std::isfinite(score); }

double weighted_score(double min_clearance, double path_length, int sharpness) {
  return kClearanceWeight * min_clearance - kLengthWeight * path_length - kSharpnessWeight * sharpness;
}

void TaskSpec::validate() const {
  if (!(goal_tol > 0.0)) throw std::invalid_argument("task: goal_tol must be positive");
  if (max_steps < 1) throw std::invalid_argument("task: max_steps must be positive");
  if (progress_window < 1 || progress_window > max_steps)
    throw std::invalid_argument("task: progress_window must lie in [1, max_steps]");
  if (!(progress_ratio > 0.0 && progress_ratio < 1.0))
    throw std::invalid_argument("task: progress_ratio must lie in (0, 1)");
}

std::vector<PreprocessParams> enumerate_candidates(int threshold) {
  if (threshold < 0 || threshold > 255) throw std::invalid_argument("threshold out of range");
  std::vector<PreprocessParams> out;
  for (const Polarity polarity : {Polarity::kDark, Polarity::kLight})
    for (const int inflate : kInflateCandidates)
      for (const int cleanup : kCleanupCandidates) out.push_back({threshold, polarity, inflate, cleanup});
  return out;
}

ScoredCandidate score_candidate(const GrayImage& img, const PreprocessParams& params, const TaskSpec& task,
                                double clearance_cap) {
  if (!img.contains(task.start) || !img.contains(task.goal))
    throw std::out_of_range("score_candidate: task endpoint outside image");

  ScoredCandidate out{refine(binarize(img, params.threshold, params.polarity), params.cleanup, params.inflate), {}};
  out.breakdown.score = -std::numeric_limits<double>::infinity();
  if (out.grid.occupied(task.start) || out.grid.occupied(task.goal)) return out;
  if (!is_connected(out.grid, task.start, task.goal)) return out;

  const std::optional<Path> route = astar(out.grid, task.start, task.goal);
  if (!route) return out;
  const PathMetrics m = path_metrics(route->waypoints, distance_field(out.grid, clearance_cap));
  out.breakdown = {m.min_clearance, m.path_length, m.sharpness,
                   weighted_score(m.min_clearance, m.path_length, m.sharpness)};
  return out;
}

Selection select_best(const GrayImage& img, const TaskSpec& task, double clearance_cap, unsigned parallelism) {
  const std::vector<PreprocessParams> candidates = enumerate_candidates(otsu_threshold(img));
  std::vector<std::optional<ScoredCandidate>> scored(candidates.size());

  const unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(candidates.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i)
      scored[i] = score_candidate(img, candidates[i], task, clearance_cap);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++)
          scored[i] = score_candidate(img, candidates[i], task, clearance_cap);
      });
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!scored[i]->breakdown.feasible()) continue;
    if (!best || scored[i]->breakdown.score > scored[*best]->breakdown.score) best = i;
  }
  if (!best) throw NoFeasibleCandidate();
  return {std::move(scored[*best]->grid), candidates[*best], scored[*best]->breakdown};
}

}  // namespace gridpilot
