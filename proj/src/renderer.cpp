#include "chartqa/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chartqa/common.hpp"
#include "chartqa/font.hpp"
#include "chartqa/raster.hpp"

namespace chartqa {

namespace {

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{220, 220, 220};

bool has_value_axis(ChartType t) { return t != ChartType::pie; }

bool is_vertical_family(ChartType t) {
    return t == ChartType::vertical_bar || t == ChartType::grouped_bar || t == ChartType::line;
}

double max_value(const ChartSpec& spec) {
    double m = 0.0;
    for (const auto& s : spec.series) {
        for (double v : s.values) m = std::max(m, v);
    }
    return m;
}

int round_px(double v) { return static_cast<int>(std::lround(v)); }

// Pie slices are colored by palette order, independent of the series color.
Rgb slice_color(size_t cat_idx) { return palette()[cat_idx % palette().size()].rgb; }

// Legend rows: series names for multi-series charts, slice labels for pies.
std::vector<std::pair<std::string, Rgb>> legend_entries(const ChartSpec& spec) {
    std::vector<std::pair<std::string, Rgb>> entries;
    if (spec.chart_type == ChartType::pie) {
        for (size_t i = 0; i < spec.x_labels.size(); ++i)
            entries.emplace_back(spec.x_labels[i], slice_color(i));
    } else {
        for (const auto& s : spec.series) entries.emplace_back(s.name, palette_color(s.color).rgb);
    }
    return entries;
}

}  // namespace

BoxNorm ChartLayout::element_box(int series_idx, int cat_idx) const {
    const PixelRect& r = element_rects.at(series_idx).at(cat_idx);
    auto norm = [&](int px) {
        double v = static_cast<double>(px) / resolution;
        return std::clamp(std::llround(v * 100.0) / 100.0, 0.0, 1.0);
    };
    BoxNorm box;
    box.x1 = norm(r.x0);
    box.y1 = norm(r.y0);
    box.x2 = norm(r.x1);
    box.y2 = norm(r.y1);
    if (box.x2 <= box.x1) box.x2 = std::min(1.0, box.x1 + 0.01);
    if (box.y2 <= box.y1) box.y2 = std::min(1.0, box.y1 + 0.01);
    if (box.x2 <= box.x1) box.x1 = box.x2 - 0.01;
    if (box.y2 <= box.y1) box.y1 = box.y2 - 0.01;
    return box;
}

std::string box_to_string(const BoxNorm& box) {
    auto two = [](double v) {
        std::ostringstream os;
        long long cents = std::llround(v * 100.0);
        os << cents / 100 << "." << (std::abs(cents) % 100 < 10 ? "0" : "")
           << std::abs(cents) % 100;
        return os.str();
    };
    return "<box>" + two(box.x1) + "," + two(box.y1) + "," + two(box.x2) + "," + two(box.y2) +
           "</box>";
}

ChartLayout compute_layout(const ChartSpec& spec, int resolution) {
    validate(spec);
    if (resolution < 32) throw ConfigError("resolution too small: " + std::to_string(resolution));

    ChartLayout layout;
    layout.resolution = resolution;
    int s = std::max(1, resolution / 160);
    layout.scale = s;

    size_t n_cat = spec.x_labels.size();
    size_t n_series = spec.series.size();

    if (has_value_axis(spec.chart_type)) {
        layout.vmax = 1.1 * max_value(spec);
        if (layout.vmax <= 0.0) throw InputError("value axis needs a positive maximum");
        for (int k = 0; k < 5; ++k) layout.tick_values.push_back(layout.vmax * k / 4.0);
    }

    // Gutter sizing. Text never enters the plot interior except data
    // annotations, so the textless purity scan only has to cover the plot.
    int top = 11 * s;  // title band
    if (spec.legend_position == LegendPosition::top) top += 11 * s;
    int bottom = spec.chart_type == ChartType::pie ? 4 * s : 11 * s;
    int left = 4 * s;
    int right = 4 * s;

    if (has_value_axis(spec.chart_type)) {
        int max_w = 0;
        for (double t : layout.tick_values) max_w = std::max(max_w, text_width(format_value(t)));
        if (is_vertical_family(spec.chart_type)) {
            left = max_w * s + 5 * s;
        } else {
            // Horizontal bars: category names on the left, value ticks below.
            int lbl_w = 0;
            for (const auto& l : spec.x_labels) lbl_w = std::max(lbl_w, text_width(l));
            left = lbl_w * s + 5 * s;
        }
    }
    if (spec.legend_position == LegendPosition::right) {
        int lw = 0;
        for (const auto& [name, color] : legend_entries(spec))
            lw = std::max(lw, text_width(name));
        right = 5 * s + 2 * s + lw * s + 4 * s;
    }
    left = std::min(left, (3 * resolution) / 10);
    right = std::min(right, (35 * resolution) / 100);
    top = std::min(top, resolution / 4);
    bottom = std::min(bottom, resolution / 4);

    layout.plot = PixelRect{left, top, resolution - right, resolution - bottom};
    if (layout.plot.width() < 8 || layout.plot.height() < 8)
        throw ConfigError("plot area collapsed; resolution too small for this layout");

    layout.element_rects.assign(n_series, std::vector<PixelRect>(n_cat));
    const PixelRect& plot = layout.plot;
    double plot_w = plot.width();
    double plot_h = plot.height();

    auto value_to_y = [&](double v) {
        return plot.y1 - round_px(v / layout.vmax * plot_h);
    };
    auto value_to_x = [&](double v) {
        return plot.x0 + round_px(v / layout.vmax * plot_w);
    };

    switch (spec.chart_type) {
        case ChartType::vertical_bar:
        case ChartType::grouped_bar: {
            for (size_t c = 0; c < n_cat; ++c) {
                double slot0 = plot.x0 + plot_w * c / n_cat;
                double slot_w = plot_w / n_cat;
                double group_w = slot_w * (n_series > 1 ? 0.8 : 0.6);
                double group0 = slot0 + (slot_w - group_w) / 2.0;
                double bar_w = group_w / n_series;
                for (size_t si = 0; si < n_series; ++si) {
                    int x0 = round_px(group0 + bar_w * si);
                    int x1 = std::max(x0 + 1, round_px(group0 + bar_w * (si + 1)));
                    int y0 = value_to_y(spec.series[si].values[c]);
                    y0 = std::clamp(y0, plot.y0, plot.y1 - 1);
                    layout.element_rects[si][c] = PixelRect{x0, y0, x1, plot.y1};
                }
            }
            break;
        }
        case ChartType::horizontal_bar: {
            for (size_t c = 0; c < n_cat; ++c) {
                double slot0 = plot.y0 + plot_h * c / n_cat;
                double slot_h = plot_h / n_cat;
                double group_h = slot_h * (n_series > 1 ? 0.8 : 0.6);
                double group0 = slot0 + (slot_h - group_h) / 2.0;
                double bar_h = group_h / n_series;
                for (size_t si = 0; si < n_series; ++si) {
                    int y0 = round_px(group0 + bar_h * si);
                    int y1 = std::max(y0 + 1, round_px(group0 + bar_h * (si + 1)));
                    int x1 = value_to_x(spec.series[si].values[c]);
                    x1 = std::clamp(x1, plot.x0 + 1, plot.x1);
                    layout.element_rects[si][c] = PixelRect{plot.x0, y0, x1, y1};
                }
            }
            break;
        }
        case ChartType::line: {
            int half = std::max(1, 3 * s / 2);
            for (size_t c = 0; c < n_cat; ++c) {
                int cx = round_px(plot.x0 + plot_w * (c + 0.5) / n_cat);
                for (size_t si = 0; si < n_series; ++si) {
                    int cy = value_to_y(spec.series[si].values[c]);
                    cy = std::clamp(cy, plot.y0 + half, plot.y1 - half);
                    layout.element_rects[si][c] =
                        PixelRect{cx - half, cy - half, cx + half + 1, cy + half + 1};
                }
            }
            break;
        }
        case ChartType::pie: {
            double cx = (plot.x0 + plot.x1) / 2.0;
            double cy = (plot.y0 + plot.y1) / 2.0;
            double radius = 0.42 * std::min(plot_w, plot_h);
            double total = 0.0;
            for (double v : spec.series[0].values) total += v;
            double angle = -std::numbers::pi / 2.0;
            for (size_t c = 0; c < n_cat; ++c) {
                double span = 2.0 * std::numbers::pi * spec.series[0].values[c] / total;
                Wedge w{cx, cy, radius, angle, angle + span};
                layout.wedges.push_back(w);
                angle += span;

                double min_x = cx, max_x = cx, min_y = cy, max_y = cy;
                int steps = 64;
                for (int k = 0; k <= steps; ++k) {
                    double a = w.angle_start + (w.angle_end - w.angle_start) * k / steps;
                    min_x = std::min(min_x, cx + radius * std::cos(a));
                    max_x = std::max(max_x, cx + radius * std::cos(a));
                    min_y = std::min(min_y, cy + radius * std::sin(a));
                    max_y = std::max(max_y, cy + radius * std::sin(a));
                }
                layout.element_rects[0][c] =
                    PixelRect{round_px(min_x), round_px(min_y), round_px(max_x) + 1,
                              round_px(max_y) + 1};
            }
            break;
        }
    }
    return layout;
}

namespace {

void draw_axes_and_ticks(Raster& canvas, const ChartSpec& spec, const ChartLayout& layout) {
    if (!has_value_axis(spec.chart_type)) return;
    const PixelRect& plot = layout.plot;
    int s = layout.scale;

    // Gridlines first so marks and annotations paint over them.
    for (size_t k = 1; k < layout.tick_values.size(); ++k) {
        double frac = layout.tick_values[k] / layout.vmax;
        if (is_vertical_family(spec.chart_type)) {
            int y = plot.y1 - round_px(frac * plot.height());
            if (y > plot.y0) canvas.fill_rect(plot.x0, y, plot.x1, y + 1, kGrid);
        } else {
            int x = plot.x0 + round_px(frac * plot.width());
            if (x < plot.x1) canvas.fill_rect(x, plot.y0, x + 1, plot.y1, kGrid);
        }
    }

    // Left and bottom axis lines sit just outside the plot interior.
    canvas.fill_rect(plot.x0 - s, plot.y0, plot.x0, plot.y1 + s, kBlack);
    canvas.fill_rect(plot.x0 - s, plot.y1, plot.x1, plot.y1 + s, kBlack);

    for (double tick : layout.tick_values) {
        std::string label = format_value(tick);
        int w = text_width(label) * s;
        if (is_vertical_family(spec.chart_type)) {
            int y = plot.y1 - round_px(tick / layout.vmax * plot.height());
            canvas.fill_rect(plot.x0 - 3 * s, y, plot.x0 - s, y + 1, kBlack);
            canvas.text(label, plot.x0 - 4 * s - w, y - 3 * s, kBlack, s);
        } else {
            int x = plot.x0 + round_px(tick / layout.vmax * plot.width());
            canvas.fill_rect(x, plot.y1 + s, x + 1, plot.y1 + 3 * s, kBlack);
            canvas.text(label, x - w / 2, plot.y1 + 4 * s, kBlack, s);
        }
    }
}

void draw_category_labels(Raster& canvas, const ChartSpec& spec, const ChartLayout& layout) {
    const PixelRect& plot = layout.plot;
    int s = layout.scale;
    size_t n_cat = spec.x_labels.size();
    if (spec.chart_type == ChartType::pie) return;
    for (size_t c = 0; c < n_cat; ++c) {
        const std::string& label = spec.x_labels[c];
        int w = text_width(label) * s;
        if (is_vertical_family(spec.chart_type)) {
            int cx = round_px(plot.x0 + plot.width() * (c + 0.5) / n_cat);
            canvas.text(label, cx - w / 2, plot.y1 + 4 * s, kBlack, s);
        } else {
            int cy = round_px(plot.y0 + plot.height() * (c + 0.5) / n_cat);
            canvas.text(label, plot.x0 - 4 * s - w, cy - 3 * s, kBlack, s);
        }
    }
}

void draw_title_and_legend(Raster& canvas, const ChartSpec& spec, const ChartLayout& layout) {
    int s = layout.scale;
    if (!spec.title.empty()) {
        int w = text_width(spec.title) * s;
        canvas.text(spec.title, (canvas.width() - w) / 2, 2 * s, kBlack, s);
    }
    if (spec.legend_position == LegendPosition::none) return;
    auto entries = legend_entries(spec);
    if (spec.legend_position == LegendPosition::top) {
        int x = layout.plot.x0;
        int y = 12 * s;
        for (const auto& [name, color] : entries) {
            canvas.fill_rect(x, y + s, x + 5 * s, y + 6 * s, color);
            canvas.text(name, x + 7 * s, y, kBlack, s);
            x += 7 * s + text_width(name) * s + 5 * s;
        }
    } else {
        int x = layout.plot.x1 + 2 * s;
        int y = layout.plot.y0;
        for (const auto& [name, color] : entries) {
            canvas.fill_rect(x, y + s, x + 5 * s, y + 6 * s, color);
            canvas.text(name, x + 7 * s, y, kBlack, s);
            y += 9 * s;
        }
    }
}

// Draws one value annotation, kept inside the plot so the purity scan region
// covers every data numeral.
void annotate(Raster& canvas, const ChartLayout& layout, const std::string& text, int x, int y) {
    const PixelRect& plot = layout.plot;
    int s = layout.scale;
    int w = text_width(text) * s;
    x = std::clamp(x, plot.x0, std::max(plot.x0, plot.x1 - w));
    y = std::clamp(y, plot.y0, std::max(plot.y0, plot.y1 - 7 * s));
    canvas.text(text, x, y, kBlack, s);
}

void draw_marks(Raster& canvas, const ChartSpec& spec, const ChartLayout& layout) {
    int s = layout.scale;
    const PixelRect& plot = layout.plot;
    size_t n_cat = spec.x_labels.size();

    switch (spec.chart_type) {
        case ChartType::vertical_bar:
        case ChartType::grouped_bar: {
            for (size_t si = 0; si < spec.series.size(); ++si) {
                Rgb color = palette_color(spec.series[si].color).rgb;
                for (size_t c = 0; c < n_cat; ++c) {
                    const PixelRect& r = layout.element_rects[si][c];
                    canvas.fill_rect(r.x0, r.y0, r.x1, r.y1, color);
                    if (spec.annotate_values) {
                        std::string v = format_value(spec.series[si].values[c]);
                        int w = text_width(v) * s;
                        int y = r.y0 - 9 * s;
                        if (y < plot.y0) y = r.y0 + 2 * s;
                        annotate(canvas, layout, v, (r.x0 + r.x1) / 2 - w / 2, y);
                    }
                }
            }
            break;
        }
        case ChartType::horizontal_bar: {
            for (size_t si = 0; si < spec.series.size(); ++si) {
                Rgb color = palette_color(spec.series[si].color).rgb;
                for (size_t c = 0; c < n_cat; ++c) {
                    const PixelRect& r = layout.element_rects[si][c];
                    canvas.fill_rect(r.x0, r.y0, r.x1, r.y1, color);
                    if (spec.annotate_values) {
                        std::string v = format_value(spec.series[si].values[c]);
                        int w = text_width(v) * s;
                        int x = r.x1 + 2 * s;
                        if (x + w > plot.x1) x = r.x1 - w - 2 * s;
                        annotate(canvas, layout, v, x, (r.y0 + r.y1) / 2 - 3 * s);
                    }
                }
            }
            break;
        }
        case ChartType::line: {
            for (size_t si = 0; si < spec.series.size(); ++si) {
                Rgb color = palette_color(spec.series[si].color).rgb;
                for (size_t c = 0; c + 1 < n_cat; ++c) {
                    const PixelRect& a = layout.element_rects[si][c];
                    const PixelRect& b = layout.element_rects[si][c + 1];
                    canvas.line((a.x0 + a.x1) / 2, (a.y0 + a.y1) / 2, (b.x0 + b.x1) / 2,
                                (b.y0 + b.y1) / 2, color, s);
                }
                for (size_t c = 0; c < n_cat; ++c) {
                    const PixelRect& r = layout.element_rects[si][c];
                    canvas.fill_rect(r.x0, r.y0, r.x1, r.y1, color);
                    if (spec.annotate_values) {
                        std::string v = format_value(spec.series[si].values[c]);
                        int w = text_width(v) * s;
                        int y = r.y0 - 9 * s;
                        if (y < plot.y0) y = r.y1 + 2 * s;
                        annotate(canvas, layout, v, (r.x0 + r.x1) / 2 - w / 2, y);
                    }
                }
            }
            break;
        }
        case ChartType::pie: {
            for (size_t c = 0; c < n_cat; ++c) {
                const Wedge& w = layout.wedges[c];
                Rgb color = slice_color(c);
                int x0 = std::max(plot.x0, round_px(w.cx - w.radius) - 1);
                int x1 = std::min(plot.x1, round_px(w.cx + w.radius) + 2);
                int y0 = std::max(plot.y0, round_px(w.cy - w.radius) - 1);
                int y1 = std::min(plot.y1, round_px(w.cy + w.radius) + 2);
                double circle_start = -std::numbers::pi / 2.0;
                for (int y = y0; y < y1; ++y) {
                    for (int x = x0; x < x1; ++x) {
                        double dx = x + 0.5 - w.cx;
                        double dy = y + 0.5 - w.cy;
                        if (dx * dx + dy * dy > w.radius * w.radius) continue;
                        double a = std::atan2(dy, dx);
                        // Normalize into [circle_start, circle_start + 2*pi).
                        while (a < circle_start) a += 2.0 * std::numbers::pi;
                        while (a >= circle_start + 2.0 * std::numbers::pi)
                            a -= 2.0 * std::numbers::pi;
                        if (a >= w.angle_start && a < w.angle_end) canvas.set(x, y, color);
                    }
                }
            }
            if (spec.annotate_values) {
                for (size_t c = 0; c < n_cat; ++c) {
                    const Wedge& w = layout.wedges[c];
                    double mid = (w.angle_start + w.angle_end) / 2.0;
                    std::string v = format_value(spec.series[0].values[c]);
                    int tw = text_width(v) * s;
                    int x = round_px(w.cx + 0.62 * w.radius * std::cos(mid)) - tw / 2;
                    int y = round_px(w.cy + 0.62 * w.radius * std::sin(mid)) - 3 * s;
                    annotate(canvas, layout, v, x, y);
                }
            }
            break;
        }
    }
}

}  // namespace

ChartImage render(const ChartSpec& spec, int resolution, int patch_size) {
    if (patch_size <= 0) throw ConfigError("patch size must be positive");
    if (resolution % patch_size != 0)
        throw ConfigError("resolution " + std::to_string(resolution) +
                          " is not divisible by patch size " + std::to_string(patch_size));
    ChartLayout layout = compute_layout(spec, resolution);

    Raster canvas(resolution, resolution, kWhite);
    draw_axes_and_ticks(canvas, spec, layout);
    draw_marks(canvas, spec, layout);
    draw_category_labels(canvas, spec, layout);
    draw_title_and_legend(canvas, spec, layout);

    ChartImage image;
    image.resolution = resolution;
    image.spec_ref = spec.chart_id;
    image.pixels = canvas.pixels();
    return image;
}

std::vector<uint8_t> to_rgb8(const ChartImage& image) {
    std::vector<uint8_t> out(image.pixels.size());
    for (size_t i = 0; i < image.pixels.size(); ++i) {
        double v = std::clamp(image.pixels[i], 0.0, 1.0);
        out[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

uint64_t image_digest(const ChartImage& image) {
    std::vector<uint8_t> bytes = to_rgb8(image);
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    return h.value();
}

int count_digit_glyphs_in_plot(const ChartImage& image, const ChartLayout& layout) {
    int s = layout.scale;
    const PixelRect& plot = layout.plot;
    auto is_black = [&](int x, int y) {
        size_t base = (static_cast<size_t>(y) * image.resolution + x) * 3;
        return image.pixels[base] == 0.0 && image.pixels[base + 1] == 0.0 &&
               image.pixels[base + 2] == 0.0;
    };
    int count = 0;
    int win_w = kGlyphWidth * s;
    int win_h = kGlyphHeight * s;
    for (int y = plot.y0; y + win_h <= plot.y1; ++y) {
        for (int x = plot.x0; x + win_w <= plot.x1; ++x) {
            for (char d = '0'; d <= '9'; ++d) {
                const Glyph& g = glyph(d);
                bool match = true;
                for (int gy = 0; gy < kGlyphHeight && match; ++gy) {
                    for (int gx = 0; gx < kGlyphWidth && match; ++gx) {
                        bool want = glyph_pixel(g, gx, gy);
                        for (int oy = 0; oy < s && match; ++oy) {
                            for (int ox = 0; ox < s && match; ++ox) {
                                if (is_black(x + gx * s + ox, y + gy * s + oy) != want)
                                    match = false;
                            }
                        }
                    }
                }
                if (match) ++count;
            }
        }
    }
    return count;
}

}  // namespace chartqa
