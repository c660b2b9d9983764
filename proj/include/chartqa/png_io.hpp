#ifndef CHARTQA_PNG_IO_HPP_
#define CHARTQA_PNG_IO_HPP_

#include <string>

#include "chartqa/renderer.hpp"

namespace chartqa {

// Lossless 8-bit RGB PNG. Because rendered pixel values are exact multiples
// of 1/255, save followed by load reproduces the ChartImage bit-for-bit.
void save_chart_png(const ChartImage& image, const std::string& path);

// Loads a square RGB(A) PNG; spec_ref is set to the file stem. Throws IoError
// on unreadable files and InputError on non-square images.
ChartImage load_chart_png(const std::string& path);

}  // namespace chartqa

#endif  // CHARTQA_PNG_IO_HPP_
