#include "gridpilot/png_io.hpp"

#include <png.h>

#include <vector>

#include "gridpilot/occgrid.hpp"

namespace gridpilot {

namespace {

void write_pixels(const std::filesystem::path& path, int width, int height, png_uint_32 format, const void* data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write '" + path.string() + "': " + msg);
  }
}

}  // namespace

ColorImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot read '" + path.string() + "': " + msg);
  }
  // Alpha is dropped by compositing onto white, which matches how maps are viewed.
  image.format = PNG_FORMAT_RGB;
  const png_color white{255, 255, 255};
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, &white, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode '" + path.string() + "': " + msg);
  }

  ColorImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < img.size(); ++i) img.cells()[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  write_pixels(path, img.width(), img.height(), PNG_FORMAT_GRAY, img.cells().data());
}

void write_png(const std::filesystem::path& path, const ColorImage& img) {
  std::vector<std::uint8_t> buffer;
  buffer.reserve(img.size() * 3);
  for (const Rgb& px : img.cells()) buffer.insert(buffer.end(), {px.r, px.g, px.b});
  write_pixels(path, img.width(), img.height(), PNG_FORMAT_RGB, buffer.data());
}

GrayImage grid_to_image(const OccupancyGrid& grid) {
  GrayImage img(grid.width(), grid.height());
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x) img.at(x, y) = grid.occupied(x, y) ? 0 : 255;
  return img;
}

OccupancyGrid grid_from_image(const ColorImage& img) {
  OccupancyGrid grid(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) grid.set(x, y, luminance(img.at(x, y)) < 128);
  return grid;
}

void write_grid_png(const std::filesystem::path& path, const OccupancyGrid& grid) {
  write_png(path, grid_to_image(grid));
}

OccupancyGrid read_grid_png(const std::filesystem::path& path) { return grid_from_image(read_png(path)); }

}  // namespace gridpilot
