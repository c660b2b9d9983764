#ifndef CHARTQA_RASTER_HPP_
#define CHARTQA_RASTER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "chartqa/chart_spec.hpp"

namespace chartqa {

// RGB canvas with values in [0, 1] per channel, row-major, channel-interleaved.
// All drawing primitives clip silently against the canvas bounds so callers
// never have to pre-clamp coordinates.
class Raster {
  public:
    Raster(int width, int height, Rgb background);

    int width() const { return width_; }
    int height() const { return height_; }

    void set(int x, int y, Rgb color);
    Rgb get(int x, int y) const;

    // Fills [x0, x1) x [y0, y1).
    void fill_rect(int x0, int y0, int x1, int y1, Rgb color);

    // Bresenham line with a square pen of the given side length.
    void line(int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);

    // Draws text with the 5x7 bitmap font; each font pixel becomes a
    // scale x scale block. (x, y) is the top-left corner of the first glyph.
    void text(const std::string& s, int x, int y, Rgb color, int scale = 1);

    // Flat [0, 1] pixel data, size width * height * 3, index (y*W + x)*3 + c.
    const std::vector<double>& pixels() const { return pixels_; }

  private:
    int width_;
    int height_;
    std::vector<double> pixels_;
};

}  // namespace chartqa

#endif  // CHARTQA_RASTER_HPP_
