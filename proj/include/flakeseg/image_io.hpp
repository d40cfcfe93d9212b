// PNG file I/O for images and masks.
//
// Images are 8-bit RGB PNGs. Masks are 8-bit single-channel PNGs holding
// raw class indices; palette-indexed files are accepted on read as long as
// every index stays in 0..6. Round trips are lossless.
#pragma once

#include <string>

#include "flakeseg/image.hpp"

namespace flakeseg {

Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

LabelMask load_mask(const std::string& path);
void save_mask(const LabelMask& mask, const std::string& path);

} // namespace flakeseg
