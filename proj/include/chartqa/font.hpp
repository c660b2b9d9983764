#ifndef CHARTQA_FONT_HPP_
#define CHARTQA_FONT_HPP_

#include <array>
#include <cstdint>
#include <string>

namespace chartqa {

// Fixed 5x7 bitmap font. The renderer owns this atlas, which is what makes
// the textless purity check possible: a scan can match glyph bit patterns
// exactly instead of running OCR.
inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphAdvance = 6;  // glyph plus 1px spacing

// Rows top to bottom; bit (kGlyphWidth-1-x) of row y is column x.
using Glyph = std::array<uint8_t, kGlyphHeight>;

bool glyph_defined(char c);
// Unknown characters fall back to '?'.
const Glyph& glyph(char c);
bool glyph_pixel(const Glyph& g, int x, int y);

// Width in pixels at scale 1 (no trailing spacing column).
int text_width(const std::string& s);

}  // namespace chartqa

#endif  // CHARTQA_FONT_HPP_
