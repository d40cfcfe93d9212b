#include "flakeseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flakeseg {

namespace {

// Full-range BT.601 luma coefficients.
constexpr double kKr = 0.299;
constexpr double kKg = 0.587;
constexpr double kKb = 0.114;

// Chroma scale factors derived from the luma coefficients:
// Cb = 0.5*(B - Y)/(1 - Kb) + 128, Cr = 0.5*(R - Y)/(1 - Kr) + 128.
constexpr double kCbScale = 0.5 / (1.0 - kKb);
constexpr double kCrScale = 0.5 / (1.0 - kKr);

} // namespace

Image make_image(int width, int height, std::array<std::uint8_t, 3> fill) {
    Image img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        img.pixels[i * 3 + 0] = fill[0];
        img.pixels[i * 3 + 1] = fill[1];
        img.pixels[i * 3 + 2] = fill[2];
    }
    return img;
}

LabelMask make_mask(int width, int height, std::uint8_t fill) {
    LabelMask mask;
    mask.width = width;
    mask.height = height;
    mask.classes.assign(static_cast<std::size_t>(width) * height, fill);
    return mask;
}

void check_image(const Image& img) {
    if (img.width < kMinImageSide || img.height < kMinImageSide)
        throw Error("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                    ", below the 3x3 minimum");
    if (img.pixels.size() != img.pixel_count() * 3)
        throw Error("image buffer size does not match declared dimensions");
}

void check_mask(const LabelMask& mask) {
    if (mask.width < kMinImageSide || mask.height < kMinImageSide)
        throw Error("mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                    ", below the 3x3 minimum");
    if (mask.classes.size() != mask.pixel_count())
        throw Error("mask buffer size does not match declared dimensions");
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) >= kNumClasses)
                throw Error("mask value " + std::to_string(int(mask.at(x, y))) + " at (" +
                            std::to_string(x) + "," + std::to_string(y) + ") exceeds class 6");
}

std::array<std::uint8_t, 3> rgb_triple_to_ycbcr(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double yv = kKr * r + kKg * g + kKb * b;
    const double cb = 128.0 + kCbScale * (b - yv);
    const double cr = 128.0 + kCrScale * (r - yv);
    return {clamp_u8(yv), clamp_u8(cb), clamp_u8(cr)};
}

std::array<std::uint8_t, 3> ycbcr_triple_to_rgb(std::uint8_t y, std::uint8_t cb, std::uint8_t cr) {
    const double dcb = cb - 128.0;
    const double dcr = cr - 128.0;
    const double r = y + dcr / kCrScale;
    const double b = y + dcb / kCbScale;
    const double g = (y - kKr * r - kKb * b) / kKg;
    return {clamp_u8(r), clamp_u8(g), clamp_u8(b)};
}

YCbCrImage rgb_to_ycbcr(const Image& img) {
    check_image(img);
    YCbCrImage out;
    out.width = img.width;
    out.height = img.height;
    const std::size_t n = img.pixel_count();
    out.y.resize(n);
    out.cb.resize(n);
    out.cr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto t = rgb_triple_to_ycbcr(img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]);
        out.y[i] = t[0];
        out.cb[i] = t[1];
        out.cr[i] = t[2];
    }
    return out;
}

Image ycbcr_to_rgb(const YCbCrImage& img) {
    Image out;
    out.width = img.width;
    out.height = img.height;
    const std::size_t n = img.pixel_count();
    out.pixels.resize(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        auto t = ycbcr_triple_to_rgb(img.y[i], img.cb[i], img.cr[i]);
        out.pixels[i * 3 + 0] = t[0];
        out.pixels[i * 3 + 1] = t[1];
        out.pixels[i * 3 + 2] = t[2];
    }
    return out;
}

namespace {

// Pixel-center source coordinate for a destination index.
inline double src_coord(int dst, int dst_size, int src_size) {
    return (dst + 0.5) * (static_cast<double>(src_size) / dst_size) - 0.5;
}

} // namespace

Image resize_bilinear(const Image& img, int new_width, int new_height) {
    check_image(img);
    if (new_width < kMinImageSide || new_height < kMinImageSide)
        throw Error("resize target " + std::to_string(new_width) + "x" + std::to_string(new_height) +
                    " is below the 3x3 minimum");
    if (new_width == img.width && new_height == img.height) return img;

    Image out;
    out.width = new_width;
    out.height = new_height;
    out.pixels.resize(static_cast<std::size_t>(new_width) * new_height * 3);
    for (int dy = 0; dy < new_height; ++dy) {
        double sy = src_coord(dy, new_height, img.height);
        if (sy < 0.0) sy = 0.0;
        if (sy > img.height - 1.0) sy = img.height - 1.0;
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int dx = 0; dx < new_width; ++dx) {
            double sx = src_coord(dx, new_width, img.width);
            if (sx < 0.0) sx = 0.0;
            if (sx > img.width - 1.0) sx = img.width - 1.0;
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
                const double bot = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
                out.at(dx, dy, c) = clamp_u8(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    return out;
}

LabelMask resize_nearest(const LabelMask& mask, int new_width, int new_height) {
    check_mask(mask);
    if (new_width < kMinImageSide || new_height < kMinImageSide)
        throw Error("resize target " + std::to_string(new_width) + "x" + std::to_string(new_height) +
                    " is below the 3x3 minimum");
    if (new_width == mask.width && new_height == mask.height) return mask;

    LabelMask out = make_mask(new_width, new_height);
    for (int dy = 0; dy < new_height; ++dy) {
        int sy = static_cast<int>(std::floor(src_coord(dy, new_height, mask.height) + 0.5));
        sy = std::max(0, std::min(sy, mask.height - 1));
        for (int dx = 0; dx < new_width; ++dx) {
            int sx = static_cast<int>(std::floor(src_coord(dx, new_width, mask.width) + 0.5));
            sx = std::max(0, std::min(sx, mask.width - 1));
            out.at(dx, dy) = mask.at(sx, sy);
        }
    }
    return out;
}

} // namespace flakeseg
