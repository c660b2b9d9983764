#ifndef CHARTQA_RENDERER_HPP_
#define CHARTQA_RENDERER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "chartqa/chart_spec.hpp"

namespace chartqa {

// Square raster of a chart spec. Pixels are RGB in [0, 1], row-major,
// channel-interleaved; every value is exactly n/255 so the 8-bit PNG
// round trip is lossless.
struct ChartImage {
    int resolution = 0;
    std::string spec_ref;
    std::vector<double> pixels;  // size resolution * resolution * 3

    double pixel(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * resolution + x) * 3 + c];
    }
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

// Pie slice geometry. Angles use screen coordinates (y down), so the arc
// from angle_start to angle_end sweeps clockwise as seen by the viewer;
// slice 0 starts at straight up (-pi/2).
struct Wedge {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double angle_start = 0.0;
    double angle_end = 0.0;
};

// Normalized bounding box with 0 <= x1 < x2 <= 1, 0 <= y1 < y2 <= 1,
// rounded to 2 decimals.
struct BoxNorm {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;
};

// Deterministic geometry shared by the rasterizer and every test oracle.
// element_rects[s][c] is the mark for series s at category c: the bar body
// for bar charts, the marker square for line charts, the slice bounding box
// for pies (series index 0).
struct ChartLayout {
    int resolution = 0;
    int scale = 1;         // text magnification, max(1, resolution / 160)
    PixelRect plot;        // data region; axes, labels, legend live outside it
    double vmax = 0.0;     // value-axis maximum, 0 when there is no value axis
    std::vector<double> tick_values;
    std::vector<std::vector<PixelRect>> element_rects;
    std::vector<Wedge> wedges;  // pie only, one per category

    // Grounding box for one mark, normalized by the image resolution and
    // rounded to 2 decimals; degenerate rounding is bumped so x1 < x2 always
    // holds strictly.
    BoxNorm element_box(int series_idx, int cat_idx) const;
};

std::string box_to_string(const BoxNorm& box);

ChartLayout compute_layout(const ChartSpec& spec, int resolution);

// Pure rasterization: identical (spec, resolution) inputs yield bit-identical
// pixels. Throws ConfigError when resolution is not divisible by patch_size.
ChartImage render(const ChartSpec& spec, int resolution, int patch_size = 32);

// FNV-1a over the 8-bit quantized pixel stream; stable across runs and equal
// for byte-identical renders.
uint64_t image_digest(const ChartImage& image);

std::vector<uint8_t> to_rgb8(const ChartImage& image);

// Counts exact digit-glyph matches inside the plot interior by template
// matching against the renderer's own font atlas: a match needs every on-bit
// block black and every off-bit block non-black. Textless charts must score 0.
int count_digit_glyphs_in_plot(const ChartImage& image, const ChartLayout& layout);

}  // namespace chartqa

#endif  // CHARTQA_RENDERER_HPP_
