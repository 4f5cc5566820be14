#pragma once

#include <stdexcept>
#include <vector>

#include "gridpilot/grid.hpp"
#include "gridpilot/occgrid.hpp"

namespace gridpilot {

/// One preprocessing candidate.
struct PreprocessParams {
  int threshold = 0;
  Polarity polarity = Polarity::kDark;
  int inflate = 0;
  int cleanup = 0;

  friend bool operator==(const PreprocessParams&, const PreprocessParams&) = default;
};

inline constexpr int kInflateCandidates[] = {0, 1, 2, 3};
inline constexpr int kCleanupCandidates[] = {0, 4, 8, 12, 16};

// Objective weights.
inline constexpr double kClearanceWeight = 2.5;
inline constexpr double kLengthWeight = 0.02;
inline constexpr double kSharpnessWeight = 1.2;

struct ScoreBreakdown {
  double min_clearance = 0.0;
  double path_length = 0.0;
  int sharpness = 0;
  double score = 0.0;  ///< -inf when infeasible

  bool feasible() const;
};

/// 2.5*clearance - 0.02*length - 1.2*sharpness.
double weighted_score(double min_clearance, double path_length, int sharpness);

struct TaskSpec {
  Pixel start;
  Pixel goal;
  double goal_tol = 20.0;
  int max_steps = 2500;
  int progress_window = 400;
  double progress_ratio = 0.7;

  void validate() const;
};

/// polarity-major, then inflate, then cleanup; 40 entries.
std::vector<PreprocessParams> enumerate_candidates(int threshold);

struct ScoredCandidate {
  OccupancyGrid grid;
  ScoreBreakdown breakdown;
};

ScoredCandidate score_candidate(const GrayImage& img, const PreprocessParams& params, const TaskSpec& task,
                                double clearance_cap = kDefaultClearanceCap);

struct Selection {
  OccupancyGrid grid;
  PreprocessParams params;
  ScoreBreakdown breakdown;
};

class NoFeasibleCandidate : public std::runtime_error {
 public:
  NoFeasibleCandidate() : std::runtime_error("no feasible preprocessing candidate: start/goal blocked or disconnected") {}
};

/// Highest score over the candidate set; ties keep the earliest candidate.
/// `parallelism` > 1 scores candidates on worker threads; the reduction is
/// always done in enumeration order.
Selection select_best(const GrayImage& img, const TaskSpec& task, double clearance_cap = kDefaultClearanceCap,
                      unsigned parallelism = 1);

}  // namespace gridpilot
