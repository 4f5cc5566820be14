#include "gridpilot/sim2d.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gridpilot/occgrid.hpp"

namespace gridpilot {

void RobotConfig::validate() const {
  if (!(axle_length > 0.0)) throw std::invalid_argument("robot: axle_length must be positive");
  if (!(sensor_range > 0.0)) throw std::invalid_argument("robot: sensor_range must be positive");
  if (n_rays < 1) throw std::invalid_argument("robot: n_rays must be at least 1");
  if (!(v_max > 0.0)) throw std::invalid_argument("robot: v_max must be positive");
  if (!(body_radius >= 0.0)) throw std::invalid_argument("robot: body_radius must be non-negative");
  if (!std::isfinite(theta0)) throw std::invalid_argument("robot: theta0 must be finite");
}

RobotConfig low_speed_preset() {
  RobotConfig cfg;
  cfg.v_max = 0.02;
  return cfg;
}

double normalize_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

namespace {

int cell_of(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

bool body_overlaps(const OccupancyGrid& grid, double x, double y, double radius) {
  const int x0 = cell_of(x - radius) - 1;
  const int x1 = cell_of(x + radius) + 1;
  const int y0 = cell_of(y - radius) - 1;
  const int y1 = cell_of(y + radius) + 1;
  const double r2 = radius * radius;
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      if (!grid.blocked(cx, cy)) continue;
      const double dx = std::max(std::abs(x - cx) - 0.5, 0.0);
      const double dy = std::max(std::abs(y - cy) - 0.5, 0.0);
      if (dx * dx + dy * dy <= r2) return true;
    }
  }
  return false;
}

StepResult step(const RobotState& state, WheelCommand cmd, const RobotConfig& cfg, const OccupancyGrid& grid) {
  StepResult out;
  out.applied = {std::clamp(cmd.v_l, -cfg.v_max, cfg.v_max), std::clamp(cmd.v_r, -cfg.v_max, cfg.v_max)};
  const double v = 0.5 * (out.applied.v_l + out.applied.v_r);
  const double omega = (out.applied.v_r - out.applied.v_l) / cfg.axle_length;

  out.state.theta = normalize_angle(state.theta + omega);
  out.state.x = state.x + v * std::cos(state.theta);
  out.state.y = state.y + v * std::sin(state.theta);

  // Zero translation can never create a new contact.
  const bool moved = out.state.x != state.x || out.state.y != state.y;
  if (moved && body_overlaps(grid, out.state.x, out.state.y, cfg.body_radius)) {
    out.state.x = state.x;
    out.state.y = state.y;
    out.collided = true;
  }
  return out;
}

double cast_ray(const OccupancyGrid& grid, double x, double y, double angle, double max_range) {
  int cx = cell_of(x);
  int cy = cell_of(y);
  if (grid.blocked(cx, cy)) return 0.0;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  double t_max_x = step_x > 0 ? (cx + 0.5 - x) / dx : step_x < 0 ? (x - (cx - 0.5)) / -dx : kInf;
  double t_max_y = step_y > 0 ? (cy + 0.5 - y) / dy : step_y < 0 ? (y - (cy - 0.5)) / -dy : kInf;
  const double t_delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double t_delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;

  while (true) {
    double t = 0.0;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      cy += step_y;
      t_max_y += t_delta_y;
    }
    if (t >= max_range) return max_range;
    if (grid.blocked(cx, cy)) return t;
  }
}

std::vector<double> raycast(const RobotState& state, const RobotConfig& cfg, const OccupancyGrid& grid) {
  std::vector<double> ranges(static_cast<std::size_t>(cfg.n_rays));
  for (int k = 0; k < cfg.n_rays; ++k) {
    const double angle = state.theta + 2.0 * std::numbers::pi * k / cfg.n_rays;
    ranges[k] = cast_ray(grid, state.x, state.y, angle, cfg.sensor_range);
  }
  return ranges;
}

std::pair<Pixel, Pixel> snap_task(const OccupancyGrid& grid, const TaskSpec& task) {
  const auto start = nearest_free(grid, task.start, kSnapRadius);
  const auto goal = nearest_free(grid, task.goal, kSnapRadius);
  if (!start) throw std::runtime_error("start cannot be snapped to a free cell");
  if (!goal) throw std::runtime_error("goal cannot be snapped to a free cell");
  return {*start, *goal};
}

EpisodeLog run_episode(const OccupancyGrid& grid, const TaskSpec& task, const RobotConfig& cfg, Controller& controller,
                       int max_steps) {
  const auto [start, goal] = snap_task(grid, task);
  EpisodeLog log;
  log.start = start;
  log.goal = goal;

  RobotState state{static_cast<double>(start.x), static_cast<double>(start.y), normalize_angle(cfg.theta0)};
  const auto distance = [&](const RobotState& s) { return std::hypot(s.x - goal.x, s.y - goal.y); };
  double dist = distance(state);
  log.d0 = dist;
  log.d_min = dist;

  for (int t = 0; t < max_steps && !(dist < task.goal_tol); ++t) {
    WheelCommand cmd;
    try {
      cmd = controller.act({t, state, raycast(state, cfg, grid)});
    } catch (const std::exception& e) {
      log.failure = e.what();
      log.failure_step = t;
      break;
    }
    const StepResult r = step(state, cmd, cfg, grid);
    state = r.state;
    log.records.push_back({t, state.x, state.y, r.applied.v_l, r.applied.v_r});
    if (r.collided) ++log.collisions;
    dist = distance(state);
    log.d_min = std::min(log.d_min, dist);
  }
  log.final_distance = dist;
  log.goal_reached = dist < task.goal_tol;
  log.steps_used = static_cast<int>(log.records.size());
  return log;
}

EpisodeLog run_episode(const OccupancyGrid& grid, const TaskSpec& task, const RobotConfig& cfg,
                       Controller& controller) {
  return run_episode(grid, task, cfg, controller, task.max_steps);
}

void write_episode_log(std::ostream& out, const EpisodeLog& log) {
  out << "# episode\n";
  for (const StepRecord& r : log.records) out << fmt::format("{} {:.6f} {:.6f} {:.6f} {:.6f}\n", r.step, r.x, r.y, r.v_l, r.v_r);
  out << "# summary\n";
  out << fmt::format("start {} {}\n", log.start.x, log.start.y);
  out << fmt::format("goal {} {}\n", log.goal.x, log.goal.y);
  out << fmt::format("steps_used {}\n", log.steps_used);
  out << fmt::format("collisions {}\n", log.collisions);
  out << fmt::format("d0 {:.6f}\n", log.d0);
  out << fmt::format("d_min {:.6f}\n", log.d_min);
  out << fmt::format("final_distance {:.6f}\n", log.final_distance);
  out << fmt::format("goal_reached {}\n", log.goal_reached ? 1 : 0);
  if (log.failure_step) out << fmt::format("failure_step {}\n", *log.failure_step);
  if (log.failure) {
    std::string msg = *log.failure;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << "failure " << msg << "\n";
  }
}

std::string episode_log_text(const EpisodeLog& log) {
  std::ostringstream out;
  write_episode_log(out, log);
  return out.str();
}

EpisodeLog read_episode_log(std::istream& in) {
  EpisodeLog log;
  std::string line;
  bool summary = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "# summary") {
      summary = true;
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream fields(line);
    if (!summary) {
      StepRecord r;
      if (!(fields >> r.step >> r.x >> r.y >> r.v_l >> r.v_r))
        throw std::runtime_error(fmt::format("episode log line {}: malformed record", line_no));
      log.records.push_back(r);
      continue;
    }
    std::string key;
    fields >> key;
    bool ok = true;
    if (key == "start") {
      ok = static_cast<bool>(fields >> log.start.x >> log.start.y);
    } else if (key == "goal") {
      ok = static_cast<bool>(fields >> log.goal.x >> log.goal.y);
    } else if (key == "steps_used") {
      ok = static_cast<bool>(fields >> log.steps_used);
    } else if (key == "collisions") {
      ok = static_cast<bool>(fields >> log.collisions);
    } else if (key == "d0") {
      ok = static_cast<bool>(fields >> log.d0);
    } else if (key == "d_min") {
      ok = static_cast<bool>(fields >> log.d_min);
    } else if (key == "final_distance") {
      ok = static_cast<bool>(fields >> log.final_distance);
    } else if (key == "goal_reached") {
      int v = 0;
      ok = static_cast<bool>(fields >> v);
      log.goal_reached = v != 0;
    } else if (key == "failure_step") {
      int v = 0;
      ok = static_cast<bool>(fields >> v);
      log.failure_step = v;
    } else if (key == "failure") {
      std::string rest;
      std::getline(fields >> std::ws, rest);
      log.failure = rest;
    }
    if (!ok) throw std::runtime_error(fmt::format("episode log line {}: malformed '{}'", line_no, key));
  }
  return log;
}

}  // namespace gridpilot
