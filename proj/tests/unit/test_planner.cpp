#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "generators.hpp"
#include "gridpilot/occgrid.hpp"
#include "gridpilot/planner.hpp"
#include "oracles.hpp"

using namespace gridpilot;

TEST(OctileCost, OrderingMatchesLongDouble) {
  gen::Rng rng(1);
  const long double r2 = std::sqrt(2.0L);
  for (int i = 0; i < 20000; ++i) {
    const OctileCost a{gen::uniform(rng, 0, 3000), gen::uniform(rng, 0, 3000)};
    const OctileCost b{gen::uniform(rng, 0, 3000), gen::uniform(rng, 0, 3000)};
    const long double va = a.straight + r2 * a.diagonal, vb = b.straight + r2 * b.diagonal;
    if (a == b) {
      ASSERT_TRUE((a <=> b) == 0);
    } else {
      ASSERT_EQ(a < b, va < vb) << a.straight << "+" << a.diagonal << "r vs " << b.straight << "+" << b.diagonal << "r";
    }
  }
}

TEST(OctileCost, NearTiesResolveExactly) {
  // 99 diagonal steps cost 140.007..., just above 140 straight ones.
  EXPECT_LT((OctileCost{140, 0}), (OctileCost{0, 99}));
  EXPECT_GT((OctileCost{141, 0}), (OctileCost{0, 99}));
  EXPECT_LT((OctileCost{0, 70}), (OctileCost{99, 0}));
  EXPECT_EQ(octile_distance({0, 0}, {5, -3}), (OctileCost{2, 3}));
}

TEST(Astar, StraightAndDiagonalOnOpenGrid) {
  const OccupancyGrid g(10, 10);
  const auto p = astar(g, {0, 0}, {9, 4});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->cost, (OctileCost{5, 4}));
  EXPECT_EQ(p->waypoints.front(), (Pixel{0, 0}));
  EXPECT_EQ(p->waypoints.back(), (Pixel{9, 4}));
  EXPECT_EQ(p->waypoints.size(), 10u);
}

TEST(Astar, SameCellIsZeroLengthPath) {
  const auto p = astar(OccupancyGrid(3, 3), {1, 1}, {1, 1});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->waypoints.size(), 1u);
  EXPECT_EQ(p->cost, OctileCost{});
}

TEST(Astar, BlockedOrDisconnectedEndpoints) {
  OccupancyGrid g(5, 5);
  for (int y = 0; y < 5; ++y) g.set(2, y, true);
  EXPECT_FALSE(astar(g, {0, 0}, {4, 4}));
  EXPECT_FALSE(astar(g, {2, 0}, {0, 0}));
  EXPECT_THROW(astar(g, {0, 0}, {5, 0}), std::out_of_range);
}

TEST(Astar, DoesNotCutCorners) {
  OccupancyGrid g(3, 3);
  g.set(1, 0, true);
  const auto p = astar(g, {0, 0}, {2, 1});
  ASSERT_TRUE(p);
  for (std::size_t i = 1; i < p->waypoints.size(); ++i) {
    const Pixel a = p->waypoints[i - 1], b = p->waypoints[i];
    ASSERT_TRUE(can_step(g, a, b.x - a.x, b.y - a.y));
  }
  EXPECT_EQ(p->cost, (OctileCost{3, 0}));
}

TEST(Astar, OptimalAgainstDijkstraOnRandomGrids) {
  gen::Rng rng(2);
  int found = 0;
  for (int i = 0; i < 300; ++i) {
    const int w = gen::uniform(rng, 2, 24), h = gen::uniform(rng, 2, 24);
    const OccupancyGrid g = gen::noise_grid(rng, w, h, gen::uniform_real(rng, 0.0, 0.45));
    const Pixel a{gen::uniform(rng, 0, w - 1), gen::uniform(rng, 0, h - 1)};
    const Pixel b{gen::uniform(rng, 0, w - 1), gen::uniform(rng, 0, h - 1)};
    const auto got = astar(g, a, b);
    const auto want = oracle::dijkstra(g, a, b);
    ASSERT_EQ(got.has_value(), want.has_value()) << "case " << i;
    if (!got) continue;
    ++found;
    ASSERT_EQ(got->cost, (OctileCost{want->first, want->second})) << "case " << i;
    ASSERT_EQ(got->waypoints.front(), a);
    ASSERT_EQ(got->waypoints.back(), b);
    OctileCost walked;
    for (std::size_t k = 1; k < got->waypoints.size(); ++k) {
      const Pixel p = got->waypoints[k - 1], q = got->waypoints[k];
      ASSERT_TRUE(std::abs(q.x - p.x) <= 1 && std::abs(q.y - p.y) <= 1 && !(p == q));
      ASSERT_TRUE(can_step(g, p, q.x - p.x, q.y - p.y));
      walked = walked + octile_distance(p, q);
    }
    ASSERT_EQ(walked, got->cost);
  }
  EXPECT_GT(found, 100);
}

TEST(Astar, Deterministic) {
  gen::Rng rng(4);
  const OccupancyGrid g = gen::noise_grid(rng, 40, 40, 0.2);
  const auto a = astar(g, {0, 0}, {39, 39});
  const auto b = astar(g, {0, 0}, {39, 39});
  ASSERT_EQ(a.has_value(), b.has_value());
  if (a) EXPECT_EQ(a->waypoints, b->waypoints);
}

TEST(PathMetrics, CountsDirectionChanges) {
  const std::vector<Pixel> path{{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 2}, {4, 3}};
  EXPECT_EQ(path_sharpness(path), 2);
  EXPECT_EQ(path_sharpness(path), oracle::sharpness(path));
  EXPECT_DOUBLE_EQ(path_length(path), 3.0 + 2.0 * std::sqrt(2.0));
  EXPECT_EQ(path_sharpness({}), 0);
  EXPECT_EQ(path_length({{3, 3}}), 0.0);
}

TEST(PathMetrics, MinClearanceAlongPath) {
  OccupancyGrid g(10, 5);
  g.set(5, 0, true);
  const DistanceField f = distance_field(g, 50.0);
  const std::vector<Pixel> path{{0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}, {5, 2}, {6, 2}};
  const PathMetrics m = path_metrics(path, f);
  EXPECT_DOUBLE_EQ(m.min_clearance, 2.0);
  EXPECT_EQ(m.sharpness, 0);
  EXPECT_DOUBLE_EQ(m.path_length, 6.0);
}

TEST(PathMetrics, RandomPathsAgreeWithOracle) {
  gen::Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    std::vector<Pixel> path{{0, 0}};
    const int n = gen::uniform(rng, 0, 30);
    for (int k = 0; k < n; ++k) {
      int dx = 0, dy = 0;
      while (dx == 0 && dy == 0) {
        dx = gen::uniform(rng, -1, 1);
        dy = gen::uniform(rng, -1, 1);
      }
      path.push_back({path.back().x + dx, path.back().y + dy});
    }
    ASSERT_EQ(path_sharpness(path), oracle::sharpness(path));
    ASSERT_DOUBLE_EQ(path_length(path), oracle::length(path));
  }
}
