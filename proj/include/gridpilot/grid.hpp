#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gridpilot {

/// Integer cell coordinate. The continuous point (x, y) is the centre of the cell.
struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major raster with bounds-checked construction.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("raster dimensions must be positive");
    }
    cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool contains(Pixel p) const { return contains(p.x, p.y); }

  T& at(int x, int y) { return cells_[index(x, y)]; }
  const T& at(int x, int y) const { return cells_[index(x, y)]; }
  T& at(Pixel p) { return at(p.x, p.y); }
  const T& at(Pixel p) const { return at(p.x, p.y); }

  const std::vector<T>& cells() const { return cells_; }
  std::vector<T>& cells() { return cells_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using ColorImage = Raster<Rgb>;
using GrayImage = Raster<std::uint8_t>;

/// Boolean obstacle raster; true marks an obstacle cell.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, bool fill = false) : cells_(width, height, fill ? 1 : 0) {}

  int width() const { return cells_.width(); }
  int height() const { return cells_.height(); }
  bool contains(int x, int y) const { return cells_.contains(x, y); }
  bool contains(Pixel p) const { return cells_.contains(p); }

  bool occupied(int x, int y) const { return cells_.at(x, y) != 0; }
  bool occupied(Pixel p) const { return occupied(p.x, p.y); }
  bool free(int x, int y) const { return !occupied(x, y); }
  bool free(Pixel p) const { return !occupied(p); }
  void set(int x, int y, bool obstacle) { cells_.at(x, y) = obstacle ? 1 : 0; }
  void set(Pixel p, bool obstacle) { set(p.x, p.y, obstacle); }

  /// Out-of-bounds cells count as blocked.
  bool blocked(int x, int y) const { return !contains(x, y) || occupied(x, y); }

  std::size_t obstacle_count() const;
  double obstacle_ratio() const;

  const std::vector<std::uint8_t>& raw() const { return cells_.cells(); }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  Raster<std::uint8_t> cells_;
};

/// Euclidean distance (px) from each cell centre to the nearest obstacle centre, capped.
struct DistanceField {
  Raster<double> dist;
  double cap = 0.0;

  int width() const { return dist.width(); }
  int height() const { return dist.height(); }
  double at(int x, int y) const { return dist.at(x, y); }
  double at(Pixel p) const { return dist.at(p); }
};

}  // namespace gridpilot
