#include "gridpilot/params.hpp"

#include <fstream>

#include "gridpilot/png_io.hpp"

namespace gridpilot {

using json = nlohmann::json;

TaskSpec MapParams::task() const {
  TaskSpec t;
  t.start = start;
  t.goal = goal;
  t.goal_tol = goal_tol_px;
  t.max_steps = max_steps;
  t.progress_window = std::min(t.progress_window, max_steps);
  return t;
}

RobotConfig MapParams::robot(const RobotConfig& base) const {
  RobotConfig cfg = base;
  cfg.axle_length = axle_length_px;
  cfg.sensor_range = sensor_range_px;
  cfg.n_rays = n_rays;
  cfg.v_max = v_max;
  return cfg;
}

json to_json(const MapParams& p) {
  return {{"width", p.width},
          {"height", p.height},
          {"threshold", p.threshold},
          {"polarity", std::string(to_string(p.polarity))},
          {"inflate_px", p.inflate_px},
          {"cleanup", p.cleanup},
          {"start", {p.start.x, p.start.y}},
          {"goal", {p.goal.x, p.goal.y}},
          {"axle_length_px", p.axle_length_px},
          {"sensor_range_px", p.sensor_range_px},
          {"n_rays", p.n_rays},
          {"v_max", p.v_max},
          {"goal_tol_px", p.goal_tol_px},
          {"max_steps", p.max_steps}};
}

MapParams params_from_json(const json& j) {
  MapParams p;
  p.width = j.at("width").get<int>();
  p.height = j.at("height").get<int>();
  p.threshold = j.at("threshold").get<int>();
  p.polarity = parse_polarity(j.at("polarity").get<std::string>());
  p.inflate_px = j.at("inflate_px").get<int>();
  p.cleanup = j.at("cleanup").get<int>();
  p.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
  p.goal = {j.at("goal").at(0).get<int>(), j.at("goal").at(1).get<int>()};
  p.axle_length_px = j.value("axle_length_px", p.axle_length_px);
  p.sensor_range_px = j.value("sensor_range_px", p.sensor_range_px);
  p.n_rays = j.value("n_rays", p.n_rays);
  p.v_max = j.value("v_max", p.v_max);
  p.goal_tol_px = j.value("goal_tol_px", p.goal_tol_px);
  p.max_steps = j.value("max_steps", p.max_steps);
  return p;
}

MapParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open params '" + path.string() + "'");
  return params_from_json(json::parse(in));
}

void save_params(const std::filesystem::path& path, const MapParams& p) {
  std::ofstream out(path, std::ios::binary);
  out << to_json(p).dump(2) << "\n";
  if (!out) throw IoError("cannot write params '" + path.string() + "'");
}

}  // namespace gridpilot
