#include "flakeseg/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace flakeseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw Error(path + ": " + why);
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw Error("libpng: failed to allocate read structs");
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw Error("libpng: failed to allocate write structs");
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;
};

// Reads the whole file into row buffers of `channels` bytes per pixel.
// Gray and palette sources are expanded to one byte per sample; no
// RGB expansion is performed for palettes when channels == 1, so class
// masks keep their raw indices.
void read_png(const std::string& path, int want_channels, int& width, int& height,
              std::vector<std::uint8_t>& data) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) fail(path, "cannot open file");

    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        fail(path, "not a PNG file");

    PngReader r;
    if (setjmp(png_jmpbuf(r.png))) fail(path, "libpng read error");
    png_init_io(r.png, file.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);

    if (want_channels == 3) {
        if (depth != 8) fail(path, "expected 8-bit depth, got " + std::to_string(depth));
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
        else if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(r.png);
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
        if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_strip_alpha(r.png);
    } else {
        // Mask path: accept 8-bit gray or palette indices (any palette depth).
        if (color == PNG_COLOR_TYPE_PALETTE) {
            if (depth < 8) png_set_packing(r.png);
        } else if (color == PNG_COLOR_TYPE_GRAY) {
            if (depth != 8) fail(path, "expected 8-bit depth, got " + std::to_string(depth));
        } else {
            fail(path, "expected single-channel mask, got color type " + std::to_string(color));
        }
    }
    png_read_update_info(r.png, r.info);

    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    if (rowbytes != static_cast<std::size_t>(w) * want_channels)
        fail(path, "unexpected channel layout after decode");

    data.resize(static_cast<std::size_t>(w) * h * want_channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * rowbytes;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    width = static_cast<int>(w);
    height = static_cast<int>(h);
}

void write_png(const std::string& path, int width, int height, int channels,
               const std::uint8_t* data) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) fail(path, "cannot open file for writing");

    PngWriter w;
    if (setjmp(png_jmpbuf(w.png))) fail(path, "libpng write error");
    png_init_io(w.png, file.get());
    png_set_IHDR(w.png, w.info, width, height, 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * width * channels);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

} // namespace

Image load_image(const std::string& path) {
    Image img;
    read_png(path, 3, img.width, img.height, img.pixels);
    check_image(img);
    return img;
}

void save_image(const Image& img, const std::string& path) {
    check_image(img);
    write_png(path, img.width, img.height, 3, img.pixels.data());
}

LabelMask load_mask(const std::string& path) {
    LabelMask mask;
    read_png(path, 1, mask.width, mask.height, mask.classes);
    if (mask.width < kMinImageSide || mask.height < kMinImageSide)
        fail(path, "mask is below the 3x3 minimum");
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y) >= kNumClasses)
                fail(path, "mask value " + std::to_string(int(mask.at(x, y))) + " at (" +
                               std::to_string(x) + "," + std::to_string(y) + ") exceeds class 6");
    return mask;
}

void save_mask(const LabelMask& mask, const std::string& path) {
    check_mask(mask);
    write_png(path, mask.width, mask.height, 1, mask.classes.data());
}

} // namespace flakeseg
