#include "gridpilot/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <queue>
#include <stdexcept>

#include "gridpilot/occgrid.hpp"

namespace gridpilot {

double OctileCost::value() const { return static_cast<double>(straight) + std::sqrt(2.0) * static_cast<double>(diagonal); }

__extension__ typedef __int128 i128;

std::strong_ordering operator<=>(const OctileCost& a, const OctileCost& b) {
  // a.s + a.d*r  vs  b.s + b.d*r  <=>  ds vs dd*r with ds = a.s - b.s, dd = b.d - a.d.
  const long ds = a.straight - b.straight;
  const long dd = b.diagonal - a.diagonal;
  if (ds == 0 && dd == 0) return std::strong_ordering::equal;
  if (ds >= 0 && dd <= 0) return std::strong_ordering::greater;
  if (ds <= 0 && dd >= 0) return std::strong_ordering::less;
  // Same sign: compare squares, 2*dd^2 against ds^2.
  const i128 lhs = static_cast<i128>(ds) * ds;
  const i128 rhs = 2 * static_cast<i128>(dd) * dd;
  if (ds > 0) return lhs > rhs ? std::strong_ordering::greater : std::strong_ordering::less;
  return lhs > rhs ? std::strong_ordering::less : std::strong_ordering::greater;
}

OctileCost octile_distance(Pixel a, Pixel b) {
  const long dx = std::labs(static_cast<long>(a.x) - b.x);
  const long dy = std::labs(static_cast<long>(a.y) - b.y);
  return {std::max(dx, dy) - std::min(dx, dy), std::min(dx, dy)};
}

namespace {

struct OpenEntry {
  OctileCost f;
  std::uint64_t order;
  int cell;
};

struct OpenCompare {
  // std::priority_queue is a max-heap: "less" means lower priority.
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    return a.order > b.order;
  }
};

constexpr int kDx[8] = {1, -1, 0, 0, 1, -1, 1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, 1, -1, -1};

}  // namespace

std::optional<Path> astar(const OccupancyGrid& grid, Pixel a, Pixel b) {
  if (!grid.contains(a) || !grid.contains(b)) throw std::out_of_range("astar: endpoint outside grid");
  if (grid.occupied(a) || grid.occupied(b)) return std::nullopt;

  const int w = grid.width();
  const auto index = [w](Pixel p) { return p.y * w + p.x; };
  const auto pixel = [w](int i) { return Pixel{i % w, i / w}; };
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(grid.height());

  std::vector<OctileCost> g(n);
  std::vector<std::uint8_t> known(n, 0);
  std::vector<std::uint8_t> closed(n, 0);
  std::vector<int> parent(n, -1);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenCompare> open;
  std::uint64_t order = 0;

  const int start = index(a);
  const int goal = index(b);
  g[start] = {};
  known[start] = 1;
  open.push({octile_distance(a, b), order++, start});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.cell]) continue;
    closed[top.cell] = 1;
    if (top.cell == goal) break;
    const Pixel p = pixel(top.cell);
    for (int k = 0; k < 8; ++k) {
      if (!can_step(grid, p, kDx[k], kDy[k])) continue;
      const Pixel q{p.x + kDx[k], p.y + kDy[k]};
      const int qi = index(q);
      if (closed[qi]) continue;
      const OctileCost step = (k < 4) ? OctileCost{1, 0} : OctileCost{0, 1};
      const OctileCost tentative = g[top.cell] + step;
      if (known[qi] && !(tentative < g[qi])) continue;
      known[qi] = 1;
      g[qi] = tentative;
      parent[qi] = top.cell;
      open.push({tentative + octile_distance(q, b), order++, qi});
    }
  }
  if (!closed[goal]) return std::nullopt;

  Path path;
  path.cost = g[goal];
  for (int c = goal; c != -1; c = parent[c]) path.waypoints.push_back(pixel(c));
  std::reverse(path.waypoints.begin(), path.waypoints.end());
  return path;
}

int path_sharpness(const std::vector<Pixel>& waypoints) {
  int changes = 0;
  for (std::size_t i = 2; i < waypoints.size(); ++i) {
    const int dx0 = waypoints[i - 1].x - waypoints[i - 2].x;
    const int dy0 = waypoints[i - 1].y - waypoints[i - 2].y;
    const int dx1 = waypoints[i].x - waypoints[i - 1].x;
    const int dy1 = waypoints[i].y - waypoints[i - 1].y;
    if (dx0 != dx1 || dy0 != dy1) ++changes;
  }
  return changes;
}

double path_length(const std::vector<Pixel>& waypoints) {
  OctileCost total;
  for (std::size_t i = 1; i < waypoints.size(); ++i) total = total + octile_distance(waypoints[i - 1], waypoints[i]);
  return total.value();
}

PathMetrics path_metrics(const std::vector<Pixel>& waypoints, const DistanceField& field) {
  PathMetrics m;
  m.path_length = path_length(waypoints);
  m.sharpness = path_sharpness(waypoints);
  m.min_clearance = waypoints.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const Pixel p : waypoints) m.min_clearance = std::min(m.min_clearance, field.at(p));
  return m;
}

}  // namespace gridpilot
