// 8-bit raster types and the pinned color/resampling math shared by the
// whole toolkit.
//
// Color standard: full-range BT.601 (the JPEG convention). Quantization is
// round-half-away-from-zero followed by clamping to 0..255, which keeps the
// conversions bit-comparable across implementations. The RGB->YCbCr->RGB
// round trip is within one intensity level per channel for every 8-bit
// color.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "flakeseg/common.hpp"

namespace flakeseg {

/// Number of thickness classes: background, 1L, 2L, 3L, 4-6L, 7-10L, bulk.
inline constexpr int kNumClasses = 7;

/// Smallest legal image side. The 3x3 noise-estimation kernel needs a full
/// neighborhood.
inline constexpr int kMinImageSide = 3;

/// Interleaved 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // (y*width + x)*3 + channel

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// Planar luma/chroma view of an image, same dimensions as the source.
struct YCbCrImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> cb;
    std::vector<std::uint8_t> cr;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Per-pixel class indices in 0..6, paired with an Image of equal dims.
struct LabelMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> classes; // y*width + x

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t at(int x, int y) const {
        return classes[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return classes[static_cast<std::size_t>(y) * width + x];
    }
};

Image make_image(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});
LabelMask make_mask(int width, int height, std::uint8_t fill = 0);

/// Throws Error unless the raster satisfies the type invariants
/// (sides >= 3, buffer sized for the declared dims, classes <= 6).
void check_image(const Image& img);
void check_mask(const LabelMask& mask);

/// Full-range BT.601 forward conversion; outputs quantized and clamped.
YCbCrImage rgb_to_ycbcr(const Image& img);

/// Inverse of rgb_to_ycbcr; out-of-gamut values clamp to 0..255.
Image ycbcr_to_rgb(const YCbCrImage& img);

/// Single-triple conversions used by converters and tests.
std::array<std::uint8_t, 3> rgb_triple_to_ycbcr(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint8_t, 3> ycbcr_triple_to_rgb(std::uint8_t y, std::uint8_t cb, std::uint8_t cr);

/// Bilinear resize with pixel-center alignment. A constant image stays
/// constant and an identity resize copies the buffer exactly.
Image resize_bilinear(const Image& img, int new_width, int new_height);

/// Nearest-neighbor resize for class masks (indices are not averageable).
LabelMask resize_nearest(const LabelMask& mask, int new_width, int new_height);

} // namespace flakeseg
