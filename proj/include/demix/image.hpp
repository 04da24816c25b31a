#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace demix {

/// Grayscale image, intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

/// 8-bit grayscale PNG only (no alpha, no palette); v / 255.
/// Throws ParseError for anything else.
GrayImage read_gray_png(const std::filesystem::path& path);

/// Values are clamped to [0, 1] and rounded to 8 bits.
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

/// 8-bit RGB, `rgb` holds width·height·3 bytes.
void write_rgb_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   const std::vector<std::uint8_t>& rgb);

}  // namespace demix
