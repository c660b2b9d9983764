#include "chartqa/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "chartqa/common.hpp"
#include "chartqa/font.hpp"

namespace chartqa {

Raster::Raster(int width, int height, Rgb background) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw InputError("raster dimensions must be positive");
    pixels_.resize(static_cast<size_t>(width) * height * 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) set(x, y, background);
    }
}

void Raster::set(int x, int y, Rgb color) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
    size_t base = (static_cast<size_t>(y) * width_ + x) * 3;
    pixels_[base + 0] = color.r / 255.0;
    pixels_[base + 1] = color.g / 255.0;
    pixels_[base + 2] = color.b / 255.0;
}

Rgb Raster::get(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    size_t base = (static_cast<size_t>(y) * width_ + x) * 3;
    auto chan = [&](int c) {
        return static_cast<uint8_t>(std::lround(std::clamp(pixels_[base + c], 0.0, 1.0) * 255.0));
    };
    return Rgb{chan(0), chan(1), chan(2)};
}

void Raster::fill_rect(int x0, int y0, int x1, int y1, Rgb color) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width_);
    y1 = std::min(y1, height_);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) set(x, y, color);
    }
}

void Raster::line(int x0, int y0, int x1, int y1, Rgb color, int thickness) {
    int half = std::max(thickness, 1) / 2;
    auto pen = [&](int cx, int cy) {
        fill_rect(cx - half, cy - half, cx - half + std::max(thickness, 1),
                  cy - half + std::max(thickness, 1), color);
    };
    int dx = std::abs(x1 - x0);
    int dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1;
    int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0;
    int y = y0;
    while (true) {
        pen(x, y);
        if (x == x1 && y == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

void Raster::text(const std::string& s, int x, int y, Rgb color, int scale) {
    scale = std::max(scale, 1);
    int cursor = x;
    for (char c : s) {
        const Glyph& g = glyph(c);
        for (int gy = 0; gy < kGlyphHeight; ++gy) {
            for (int gx = 0; gx < kGlyphWidth; ++gx) {
                if (!glyph_pixel(g, gx, gy)) continue;
                fill_rect(cursor + gx * scale, y + gy * scale, cursor + (gx + 1) * scale,
                          y + (gy + 1) * scale, color);
            }
        }
        cursor += kGlyphAdvance * scale;
    }
}

}  // namespace chartqa
