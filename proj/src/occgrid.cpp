#include "gridpilot/occgrid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace gridpilot {

std::size_t OccupancyGrid::obstacle_count() const {
  return static_cast<std::size_t>(std::count(raw().begin(), raw().end(), std::uint8_t{1}));
}

double OccupancyGrid::obstacle_ratio() const {
  return static_cast<double>(obstacle_count()) / static_cast<double>(raw().size());
}

std::string_view to_string(Polarity p) { return p == Polarity::kDark ? "dark" : "light"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "dark") return Polarity::kDark;
  if (s == "light") return Polarity::kLight;
  throw std::invalid_argument("unknown polarity '" + std::string(s) + "'");
}

std::uint8_t luminance(Rgb px) {
  // Integer weights (x 10000) keep the rounding exact: ties round up.
  const std::uint32_t weighted = 2126u * px.r + 7152u * px.g + 722u * px.b;
  return static_cast<std::uint8_t>(std::min<std::uint32_t>((weighted + 5000u) / 10000u, 255u));
}

GrayImage to_grayscale(const ColorImage& img) {
  GrayImage out(img.width(), img.height());
  std::transform(img.cells().begin(), img.cells().end(), out.cells().begin(), luminance);
  return out;
}

Histogram histogram(const GrayImage& img) {
  Histogram h{};
  for (std::uint8_t v : img.cells()) ++h[v];
  return h;
}

namespace {

__extension__ typedef __int128 i128;

// Between-class variance up to the common 1/N^2 factor, as numerator/denominator.
struct Separation {
  i128 num = 0;
  i128 den = 1;
};

bool greater(const Separation& a, const Separation& b) {
  const i128 qa = a.num / a.den;
  const i128 qb = b.num / b.den;
  if (qa != qb) return qa > qb;
  return (a.num % a.den) * b.den > (b.num % b.den) * a.den;
}

}  // namespace

int otsu_threshold(const Histogram& hist) {
  std::int64_t total = 0;
  std::int64_t total_sum = 0;
  int distinct = 0;
  int only_value = 0;
  for (int v = 0; v < 256; ++v) {
    total += static_cast<std::int64_t>(hist[v]);
    total_sum += static_cast<std::int64_t>(hist[v]) * v;
    if (hist[v] != 0) {
      ++distinct;
      only_value = v;
    }
  }
  if (total == 0) throw std::invalid_argument("otsu_threshold: empty histogram");
  if (total >= (std::int64_t{1} << 27)) throw std::invalid_argument("otsu_threshold: image too large");
  if (distinct == 1) return only_value;

  Separation best;
  int best_t = 0;
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += static_cast<std::int64_t>(hist[t]);
    s0 += static_cast<std::int64_t>(hist[t]) * t;
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 diff = static_cast<i128>(n1) * s0 - static_cast<i128>(n0) * (total_sum - s0);
    const Separation cur{diff * diff, static_cast<i128>(n0) * n1};
    if (greater(cur, best)) {
      best = cur;
      best_t = t;
    }
  }
  return best_t;
}

int otsu_threshold(const GrayImage& img) { return otsu_threshold(histogram(img)); }

OccupancyGrid binarize(const GrayImage& img, int threshold, Polarity polarity) {
  OccupancyGrid grid(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int v = img.at(x, y);
      grid.set(x, y, polarity == Polarity::kDark ? v <= threshold : v > threshold);
    }
  }
  return grid;
}

namespace {

constexpr std::array<Pixel, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
constexpr std::array<Pixel, 8> kNeighbors8{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};

// Visits the component of `seed` whose cells satisfy `member`, calling `visit`
// on each. Returns whether any member touches the grid border.
template <typename Member, typename Neighbors, typename Visit>
bool flood(const OccupancyGrid& grid, Pixel seed, Raster<std::uint8_t>& seen, const Neighbors& nbrs,
           Member member, Visit visit) {
  bool touches_border = false;
  std::deque<Pixel> queue{seed};
  seen.at(seed) = 1;
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    visit(p);
    if (p.x == 0 || p.y == 0 || p.x == grid.width() - 1 || p.y == grid.height() - 1) touches_border = true;
    for (const Pixel d : nbrs) {
      const Pixel q{p.x + d.x, p.y + d.y};
      if (!grid.contains(q) || seen.at(q) || !member(q)) continue;
      seen.at(q) = 1;
      queue.push_back(q);
    }
  }
  return touches_border;
}

}  // namespace

OccupancyGrid remove_small_obstacles(const OccupancyGrid& grid, int min_area) {
  if (min_area <= 1) return grid;
  OccupancyGrid out = grid;
  Raster<std::uint8_t> seen(grid.width(), grid.height());
  std::vector<Pixel> component;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.occupied(x, y) || seen.at(x, y)) continue;
      component.clear();
      flood(grid, {x, y}, seen, kNeighbors8, [&](Pixel q) { return grid.occupied(q); },
            [&](Pixel q) { component.push_back(q); });
      if (static_cast<int>(component.size()) < min_area) {
        for (const Pixel q : component) out.set(q, false);
      }
    }
  }
  return out;
}

OccupancyGrid fill_small_holes(const OccupancyGrid& grid, int min_area) {
  if (min_area <= 1) return grid;
  OccupancyGrid out = grid;
  Raster<std::uint8_t> seen(grid.width(), grid.height());
  std::vector<Pixel> component;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.occupied(x, y) || seen.at(x, y)) continue;
      component.clear();
      const bool border = flood(grid, {x, y}, seen, kNeighbors4, [&](Pixel q) { return grid.free(q); },
                                [&](Pixel q) { component.push_back(q); });
      if (!border && static_cast<int>(component.size()) < min_area) {
        for (const Pixel q : component) out.set(q, true);
      }
    }
  }
  return out;
}

namespace {

// 3x3 max/min filter over in-bounds neighbours only.
OccupancyGrid square_filter(const OccupancyGrid& grid, bool dilate) {
  OccupancyGrid out(grid.width(), grid.height());
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      bool value = !dilate;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!grid.contains(x + dx, y + dy)) continue;
          const bool v = grid.occupied(x + dx, y + dy);
          value = dilate ? (value || v) : (value && v);
        }
      }
      out.set(x, y, value);
    }
  }
  return out;
}

}  // namespace

OccupancyGrid close3x3(const OccupancyGrid& grid) { return square_filter(square_filter(grid, true), false); }

OccupancyGrid inflate_disk(const OccupancyGrid& grid, int radius) {
  if (radius <= 0) return grid;
  std::vector<Pixel> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius && (dx != 0 || dy != 0)) offsets.push_back({dx, dy});
    }
  }
  OccupancyGrid out = grid;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.occupied(x, y)) continue;
      for (const Pixel d : offsets) {
        if (grid.contains(x + d.x, y + d.y)) out.set(x + d.x, y + d.y, true);
      }
    }
  }
  return out;
}

OccupancyGrid refine(const OccupancyGrid& grid, int cleanup, int inflate) {
  if (cleanup < 0 || inflate < 0) throw std::invalid_argument("refine: negative parameter");
  OccupancyGrid out = remove_small_obstacles(grid, cleanup);
  out = fill_small_holes(out, cleanup);
  if (cleanup > 0) out = close3x3(out);
  return inflate_disk(out, inflate);
}

namespace {

// 1-D squared distance transform of f into d (lower envelope of parabolas).
// Infinite samples are represented by kFar, which never wins against a finite one.
constexpr double kFar = 1e20;

void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

DistanceField distance_field(const OccupancyGrid& grid, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("distance_field: cap must be positive");
  const int w = grid.width();
  const int h = grid.height();
  Raster<double> sq(w, h, kFar);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (grid.occupied(x, y)) sq.at(x, y) = 0.0;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq.at(x, y);
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq.at(x, y) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq.at(x, y);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq.at(x, y) = d[x];
  }

  DistanceField field{Raster<double>(w, h, cap), cap};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) field.dist.at(x, y) = sq.at(x, y) >= kFar ? cap : std::min(std::sqrt(sq.at(x, y)), cap);
  return field;
}

std::optional<Pixel> nearest_free(const OccupancyGrid& grid, Pixel p, int max_rad) {
  if (!grid.contains(p)) throw std::out_of_range("nearest_free: point outside grid");
  if (grid.free(p)) return p;
  for (int r = 1; r <= max_rad; ++r) {
    for (int y = p.y - r; y <= p.y + r; ++y) {
      const bool edge_row = (y == p.y - r || y == p.y + r);
      const int step = edge_row ? 1 : 2 * r;
      for (int x = p.x - r; x <= p.x + r; x += step) {
        if (grid.contains(x, y) && grid.free(x, y)) return Pixel{x, y};
      }
    }
    // Once the ring covers the whole grid there is nothing left to scan.
    if (p.x - r <= 0 && p.y - r <= 0 && p.x + r >= grid.width() - 1 && p.y + r >= grid.height() - 1) break;
  }
  return std::nullopt;
}

bool can_step(const OccupancyGrid& grid, Pixel from, int dx, int dy) {
  const Pixel to{from.x + dx, from.y + dy};
  if (!grid.contains(to) || grid.occupied(to)) return false;
  if (dx != 0 && dy != 0) {
    return grid.free(from.x + dx, from.y) && grid.free(from.x, from.y + dy);
  }
  return true;
}

Raster<int> free_components(const OccupancyGrid& grid) {
  Raster<int> labels(grid.width(), grid.height(), -1);
  int next = 0;
  std::deque<Pixel> queue;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.occupied(x, y) || labels.at(x, y) >= 0) continue;
      labels.at(x, y) = next;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        for (const Pixel d : kNeighbors8) {
          const Pixel q{p.x + d.x, p.y + d.y};
          if (!can_step(grid, p, d.x, d.y) || labels.at(q) >= 0) continue;
          labels.at(q) = next;
          queue.push_back(q);
        }
      }
      ++next;
    }
  }
  return labels;
}

bool is_connected(const OccupancyGrid& grid, Pixel a, Pixel b) {
  if (!grid.contains(a) || !grid.contains(b)) throw std::out_of_range("is_connected: point outside grid");
  if (grid.occupied(a) || grid.occupied(b)) return false;
  if (a == b) return true;
  Raster<std::uint8_t> seen(grid.width(), grid.height());
  std::deque<Pixel> queue{a};
  seen.at(a) = 1;
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (const Pixel d : kNeighbors8) {
      const Pixel q{p.x + d.x, p.y + d.y};
      if (!can_step(grid, p, d.x, d.y) || seen.at(q)) continue;
      if (q == b) return true;
      seen.at(q) = 1;
      queue.push_back(q);
    }
  }
  return false;
}

}  // namespace gridpilot
