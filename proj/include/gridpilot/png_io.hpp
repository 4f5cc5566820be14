#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gridpilot/grid.hpp"

namespace gridpilot {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads any gray, RGB, palette or alpha PNG as 8-bit RGB; alpha is composited onto white.
ColorImage read_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const ColorImage& img);

/// Occupancy PNG convention: 0 = obstacle, 255 = free.
GrayImage grid_to_image(const OccupancyGrid& grid);
/// Inverse of grid_to_image; any luminance below 128 is an obstacle.
OccupancyGrid grid_from_image(const ColorImage& img);

void write_grid_png(const std::filesystem::path& path, const OccupancyGrid& grid);
OccupancyGrid read_grid_png(const std::filesystem::path& path);

}  // namespace gridpilot
