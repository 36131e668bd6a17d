#pragma once

#include <string>

#include "core/types.hpp"

namespace vbp {

// 8-bit PNG read/write on top of libpng. Gray, gray+alpha, palette, RGB and
// RGBA inputs are all expanded to interleaved 8-bit RGB.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

}  // namespace vbp
