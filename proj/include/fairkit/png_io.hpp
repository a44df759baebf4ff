#pragma once

#include <string>

#include "fairkit/freqview.hpp"

namespace fairkit {

// Decodes any libpng-readable file into 3 RGB planes with values in [0, 1]
// (palette expanded, gray promoted, alpha stripped, 16-bit reduced).
ChannelStack read_png_rgb(const std::string& path);

// 8-bit writers; values are clamped into [0, 1] before quantization.
void write_png_gray(const std::string& path, const ImagePlane& plane);
void write_png_rgb(const std::string& path, const ChannelStack& rgb);

}  // namespace fairkit
