#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridpilot/grid.hpp"
#include "gridpilot/mapopt.hpp"

namespace gridpilot {

struct RobotConfig {
  double axle_length = 10.0;    ///< px
  double sensor_range = 60.0;   ///< px
  int n_rays = 16;
  double v_max = 2.0;           ///< px per step, per wheel
  double theta0 = 40.0;         ///< rad, normalized on use
  double body_radius = 1.0;     ///< px

  void validate() const;
};

/// Wheel limit of 0.02 px/s with dt = 1 step: kept as a preset, far too slow
/// for a 2500-step horizon on image-scale maps.
RobotConfig low_speed_preset();

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  ///< [0, 2pi)
};

struct WheelCommand {
  double v_l = 0.0;
  double v_r = 0.0;
};

double normalize_angle(double theta);

struct StepResult {
  RobotState state;
  WheelCommand applied;  ///< after clamping
  bool collided = false;
};

/// True when a disk of `radius` centred at (x, y) touches an obstacle cell or
/// leaves the grid.
bool body_overlaps(const OccupancyGrid& grid, double x, double y, double radius);

/// Unicycle update with dt = 1 step; a blocked move keeps the old position
/// but still applies the rotation.
StepResult step(const RobotState& state, WheelCommand cmd, const RobotConfig& cfg, const OccupancyGrid& grid);

/// Range along one ray to the first blocked cell boundary, capped at max_range.
double cast_ray(const OccupancyGrid& grid, double x, double y, double angle, double max_range);

/// n_rays ranges; ray k points at theta + 2*pi*k/n_rays.
std::vector<double> raycast(const RobotState& state, const RobotConfig& cfg, const OccupancyGrid& grid);

/// What the controller sees each step.
struct Observation {
  int t = 0;
  RobotState pose;
  std::vector<double> rays;
};

/// Anything that can turn observations into wheel commands. Failures are
/// reported by throwing.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual WheelCommand act(const Observation& obs) = 0;
};

struct StepRecord {
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  double v_l = 0.0;
  double v_r = 0.0;
};

struct EpisodeLog {
  std::vector<StepRecord> records;
  int collisions = 0;
  double d0 = 0.0;
  double d_min = 0.0;
  double final_distance = 0.0;
  bool goal_reached = false;
  int steps_used = 0;
  Pixel start;
  Pixel goal;
  std::optional<std::string> failure;  ///< session failure message
  std::optional<int> failure_step;
};

/// Radius used to snap task endpoints onto free cells.
inline constexpr int kSnapRadius = 50;

/// Runs one episode from the snapped start. Controller exceptions end the
/// episode and are recorded in the log rather than propagated.
EpisodeLog run_episode(const OccupancyGrid& grid, const TaskSpec& task, const RobotConfig& cfg, Controller& controller,
                       int max_steps);
EpisodeLog run_episode(const OccupancyGrid& grid, const TaskSpec& task, const RobotConfig& cfg, Controller& controller);

/// Start and goal after snapping; throws if either cannot be snapped.
std::pair<Pixel, Pixel> snap_task(const OccupancyGrid& grid, const TaskSpec& task);

/// Line-oriented text: one "step x y v_l v_r" record per line (6 decimals),
/// then a "# summary" block of key/value lines.
void write_episode_log(std::ostream& out, const EpisodeLog& log);
std::string episode_log_text(const EpisodeLog& log);
EpisodeLog read_episode_log(std::istream& in);

}  // namespace gridpilot
