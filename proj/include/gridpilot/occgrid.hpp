#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "gridpilot/grid.hpp"

namespace gridpilot {

enum class Polarity { kDark, kLight };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

/// Luminance Y = 0.2126 R + 0.7152 G + 0.0722 B, rounded half up.
std::uint8_t luminance(Rgb px);
GrayImage to_grayscale(const ColorImage& img);

using Histogram = std::array<std::uint64_t, 256>;
Histogram histogram(const GrayImage& img);

/// Otsu threshold with classes [0..T] and [T+1..255]. Ties resolve to the
/// smallest T; a single-valued histogram returns that value.
int otsu_threshold(const Histogram& hist);
int otsu_threshold(const GrayImage& img);

/// dark: obstacle where Y <= T. light: obstacle where Y > T.
OccupancyGrid binarize(const GrayImage& img, int threshold, Polarity polarity);

/// Cleanup then inflation, in this order:
///   1. drop 8-connected obstacle components with area < cleanup
///   2. fill 4-connected free components with area < cleanup that do not touch the border
///   3. if cleanup > 0, one 3x3 closing pass
///   4. dilate by the Euclidean disk of radius `inflate`
OccupancyGrid refine(const OccupancyGrid& grid, int cleanup, int inflate);

// Individual stages, exposed for testing and library use.
OccupancyGrid remove_small_obstacles(const OccupancyGrid& grid, int min_area);
OccupancyGrid fill_small_holes(const OccupancyGrid& grid, int min_area);
OccupancyGrid close3x3(const OccupancyGrid& grid);
OccupancyGrid inflate_disk(const OccupancyGrid& grid, int radius);

inline constexpr double kDefaultClearanceCap = 50.0;

/// Exact Euclidean distance transform (Felzenszwalb-Huttenlocher), min(d, cap).
DistanceField distance_field(const OccupancyGrid& grid, double cap = kDefaultClearanceCap);

/// p itself when free, else the first free cell on Chebyshev rings 1..max_rad,
/// scanning each ring row-major. nullopt when nothing free is in reach.
std::optional<Pixel> nearest_free(const OccupancyGrid& grid, Pixel p, int max_rad);

/// 8-connected reachability over free cells; diagonal moves need both
/// orthogonal neighbours free.
bool is_connected(const OccupancyGrid& grid, Pixel a, Pixel b);

/// Component labels under the same move rule as is_connected; -1 on obstacles.
Raster<int> free_components(const OccupancyGrid& grid);

/// True when the diagonal or orthogonal move (dx, dy) from `from` is legal.
bool can_step(const OccupancyGrid& grid, Pixel from, int dx, int dy);

}  // namespace gridpilot
