#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

namespace vecfit {

namespace {

std::vector<unsigned char> read_pixels(const std::string& file, png_uint_32 format, int& width,
                                       int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, file.c_str()))
    throw IoError("cannot read PNG '" + file + "': " + image.message);
  image.format = format;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + file + "': " + image.message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

void write_pixels(const std::string& file, png_uint_32 format, int width, int height,
                  const std::vector<unsigned char>& buffer) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, file.c_str(), 0, buffer.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + file + "': " + image.message);
}

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RasterFrame read_png(const std::string& file) {
  int w = 0;
  int h = 0;
  const std::vector<unsigned char> px = read_pixels(file, PNG_FORMAT_RGBA, w, h);
  RasterFrame frame(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const unsigned char* p = &px[(static_cast<std::size_t>(y) * w + x) * 4];
      const double a = p[3] / 255.0;
      for (int c = 0; c < 3; ++c) frame.rgb[c](y, x) = a * (p[c] / 255.0) + (1.0 - a);
    }
  return frame;
}

void write_png(const std::string& file, const RasterFrame& frame) {
  const int w = frame.width();
  const int h = frame.height();
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = quantize(frame.rgb[c](y, x));
  write_pixels(file, PNG_FORMAT_RGB, w, h, px);
}

ForegroundMask read_mask_png(const std::string& file) {
  int w = 0;
  int h = 0;
  const std::vector<unsigned char> px = read_pixels(file, PNG_FORMAT_GRAY, w, h);
  ForegroundMask mask(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask.bits(y, x) = px[static_cast<std::size_t>(y) * w + x] >= 128;
  return mask;
}

void write_mask_png(const std::string& file, const ForegroundMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) px[static_cast<std::size_t>(y) * w + x] = mask.bits(y, x) ? 255 : 0;
  write_pixels(file, PNG_FORMAT_GRAY, w, h, px);
}

std::string frame_file_name(int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%04d.png", index);
  return name;
}

std::vector<RasterFrame> read_frame_sequence(const std::string& dir) {
  std::vector<RasterFrame> frames;
  for (int i = 0;; ++i) {
    const std::filesystem::path file = std::filesystem::path(dir) / frame_file_name(i);
    if (!std::filesystem::exists(file)) break;
    frames.push_back(read_png(file.string()));
  }
  if (frames.empty()) throw IoError("no frames found in '" + dir + "' (expected frame_0000.png, ...)");
  return frames;
}

std::vector<std::string> write_frame_sequence(const std::string& dir,
                                              const std::vector<RasterFrame>& frames) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  std::vector<std::string> files;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string file = (std::filesystem::path(dir) / frame_file_name(static_cast<int>(i))).string();
    write_png(file, frames[i]);
    files.push_back(file);
  }
  return files;
}

}  // namespace vecfit
