#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace demix {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::array<std::uint8_t, 3> color{31, 119, 180};
};

struct PlotOptions {
  std::size_t width = 800;
  std::size_t height = 600;
  bool log_y = false;
};

/// Line plot on a white canvas with axes and light grid lines. No text.
/// Non-finite points (and non-positive ones on a log axis) are skipped.
std::vector<std::uint8_t> render_line_plot(const std::vector<Series>& series, const PlotOptions& options = {});

void write_line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                     const PlotOptions& options = {});

/// Distinct colour for the i-th series.
std::array<std::uint8_t, 3> palette(std::size_t i);

}  // namespace demix
