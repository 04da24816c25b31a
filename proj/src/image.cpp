#include "demix/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include "demix/errors.hpp"

namespace demix {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw std::runtime_error(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int color_type,
               std::size_t channels, const std::uint8_t* data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
      if (!info) throw std::runtime_error("png_create_info_struct failed");
      png_init_io(png, fp.get());
      png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                   PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      for (std::size_t r = 0; r < height; ++r) {
        png_write_row(png, const_cast<png_bytep>(data + r * width * channels));
      }
      png_write_end(png, nullptr);
    } catch (...) {
      png_destroy_write_struct(&png, &info);
      throw;
    }
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

GrayImage read_gray_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ParseError(path.string(), "cannot open image");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ParseError(path.string(), "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  GrayImage img;
  try {
    if (!info) throw std::runtime_error("png_create_info_struct failed");
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
      throw ParseError(path.string(), "expected 8-bit grayscale PNG (color type " + std::to_string(color) +
                                          ", bit depth " + std::to_string(depth) + ")");
    }
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.pixels.reserve(img.width * img.height);
    const int passes = png_set_interlace_handling(png);
    std::vector<png_byte> all(img.width * img.height);
    for (int p = 0; p < passes; ++p)
      for (std::size_t r = 0; r < img.height; ++r) png_read_row(png, all.data() + r * img.width, nullptr);
    for (png_byte b : all) img.pixels.push_back(static_cast<double>(b) / 255.0);
  } catch (const ParseError&) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  } catch (const std::exception& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(path.string(), e.what());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw DimensionError("image has " + std::to_string(image.pixels.size()) + " pixels, expected " +
                         std::to_string(image.width * image.height));
  }
  std::vector<std::uint8_t> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  write_png(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 1, bytes.data());
}

void write_rgb_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != width * height * 3) throw DimensionError("rgb buffer size does not match width*height*3");
  write_png(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb.data());
}

}  // namespace demix
