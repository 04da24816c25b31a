#include "demix/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "demix/image.hpp"

namespace demix {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

struct Canvas {
  std::size_t w, h;
  std::vector<std::uint8_t> px;

  Canvas(std::size_t width, std::size_t height) : w(width), h(height), px(width * height * 3, 255) {}

  void set(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3;
    px[i] = c[0];
    px[i + 1] = c[1];
    px[i + 2] = c[2];
  }

  void dot(long x, long y, Rgb c, int thick) {
    for (int dy = 0; dy < thick; ++dy)
      for (int dx = 0; dx < thick; ++dx) set(x + dx - thick / 2, y + dy - thick / 2, c);
  }

  // Bresenham.
  void line(long x0, long y0, long x1, long y1, Rgb c, int thick = 1) {
    const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    while (true) {
      dot(x0, y0, c, thick);
      if (x0 == x1 && y0 == y1) break;
      const long e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

bool usable(double x, double y, bool log_y) { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); }

}  // namespace

std::array<std::uint8_t, 3> palette(std::size_t i) {
  static constexpr Rgb colors[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},   {214, 39, 40},
                                   {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127}};
  return colors[i % std::size(colors)];
}

std::vector<std::uint8_t> render_line_plot(const std::vector<Series>& series, const PlotOptions& opt) {
  if (opt.width < 64 || opt.height < 64) throw std::invalid_argument("plot: canvas too small");
  Canvas cv(opt.width, opt.height);
  const long left = 60, right = static_cast<long>(opt.width) - 20;
  const long top = 20, bottom = static_cast<long>(opt.height) - 50;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot: series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i], opt.log_y)) continue;
      const double y = opt.log_y ? std::log10(s.y[i]) : s.y[i];
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) {
    return left + std::lround((x - xmin) / (xmax - xmin) * static_cast<double>(right - left));
  };
  auto py = [&](double y) {
    return bottom - std::lround((y - ymin) / (ymax - ymin) * static_cast<double>(bottom - top));
  };

  const Rgb grid{225, 225, 225}, axis{0, 0, 0};
  for (int i = 0; i <= 10; ++i) {
    const long gx = left + (right - left) * i / 10;
    const long gy = bottom - (bottom - top) * i / 10;
    cv.line(gx, top, gx, bottom, grid);
    cv.line(left, gy, right, gy, grid);
    cv.line(gx, bottom, gx, bottom + 5, axis);
    cv.line(left - 5, gy, left, gy, axis);
  }
  if (opt.log_y) {
    for (double d = std::ceil(ymin); d <= ymax; d += 1.0) cv.line(left - 10, py(d), left, py(d), axis, 2);
  }
  cv.line(left, bottom, right, bottom, axis, 2);
  cv.line(left, top, left, bottom, axis, 2);

  for (const auto& s : series) {
    bool have = false;
    long lx = 0, ly = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i], opt.log_y)) {
        have = false;
        continue;
      }
      const long cx = px(s.x[i]);
      const long cy = py(opt.log_y ? std::log10(s.y[i]) : s.y[i]);
      if (have) {
        cv.line(lx, ly, cx, cy, s.color, 2);
      } else {
        cv.dot(cx, cy, s.color, 4);
      }
      lx = cx;
      ly = cy;
      have = true;
    }
  }
  return std::move(cv.px);
}

void write_line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                     const PlotOptions& options) {
  write_rgb_png(path, options.width, options.height, render_line_plot(series, options));
}

}  // namespace demix
