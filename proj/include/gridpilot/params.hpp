#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gridpilot/mapopt.hpp"
#include "gridpilot/sim2d.hpp"

namespace gridpilot {

/// Contents of params.json: the selected preprocessing plus robot and task
/// fields. Serialized with exactly these keys.
struct MapParams {
  int width = 0;
  int height = 0;
  int threshold = 0;
  Polarity polarity = Polarity::kDark;
  int inflate_px = 0;
  int cleanup = 0;
  Pixel start;
  Pixel goal;
  double axle_length_px = 10.0;
  double sensor_range_px = 60.0;
  int n_rays = 16;
  double v_max = 2.0;
  double goal_tol_px = 20.0;
  int max_steps = 2500;

  TaskSpec task() const;
  /// theta0 and body_radius are not part of params.json; they come from `base`.
  RobotConfig robot(const RobotConfig& base = {}) const;
};

nlohmann::json to_json(const MapParams& p);
MapParams params_from_json(const nlohmann::json& j);
MapParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const MapParams& p);

}  // namespace gridpilot
