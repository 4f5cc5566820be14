#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "gridpilot/grid.hpp"

namespace gridpilot {

/// Exact octile path cost: `straight` unit steps plus `diagonal` sqrt(2) steps.
/// Ordering compares a + b*sqrt(2) exactly, with no floating point involved.
struct OctileCost {
  long straight = 0;
  long diagonal = 0;

  double value() const;

  friend OctileCost operator+(OctileCost a, OctileCost b) {
    return {a.straight + b.straight, a.diagonal + b.diagonal};
  }
  friend bool operator==(const OctileCost&, const OctileCost&) = default;
  friend std::strong_ordering operator<=>(const OctileCost& a, const OctileCost& b);
};

/// Octile distance between two cells, which is also the heuristic.
OctileCost octile_distance(Pixel a, Pixel b);

struct Path {
  std::vector<Pixel> waypoints;
  OctileCost cost;

  bool empty() const { return waypoints.empty(); }
};

/// A* over 8-connected free cells without corner cutting. Ties on f resolve
/// first-in-first-out. nullopt when a and b are not connected (or not free).
std::optional<Path> astar(const OccupancyGrid& grid, Pixel a, Pixel b);

struct PathMetrics {
  double min_clearance = 0.0;
  double path_length = 0.0;
  int sharpness = 0;
};

/// Direction changes along consecutive steps.
int path_sharpness(const std::vector<Pixel>& waypoints);
double path_length(const std::vector<Pixel>& waypoints);
PathMetrics path_metrics(const std::vector<Pixel>& waypoints, const DistanceField& field);

}  // namespace gridpilot
