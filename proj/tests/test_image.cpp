#include "flakeseg/image.hpp"
#include "flakeseg/image_io.hpp"

#include <doctest.h>
#include <png.h>

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "test_util.hpp"

using namespace flakeseg;

namespace {

// Writes a PNG outside the library's save path so malformed inputs
// (out-of-range mask values, sub-minimum dimensions, palettes) can be
// produced for the loader's error contract.
void write_raw_png(const std::string& path, int width, int height, int color_type,
                   const std::vector<std::uint8_t>& data, int channels,
                   const std::vector<std::array<std::uint8_t, 3>>& palette = {}) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> plte(palette.size());
    for (std::size_t i = 0; i < palette.size(); ++i)
        plte[i] = {palette[i][0], palette[i][1], palette[i][2]};
    if (!plte.empty()) png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

} // namespace

TEST_CASE("rgb_to_ycbcr pins the full-range BT.601 anchors") {
    CHECK(rgb_triple_to_ycbcr(0, 0, 0) == std::array<std::uint8_t, 3>{0, 128, 128});
    CHECK(rgb_triple_to_ycbcr(255, 255, 255) == std::array<std::uint8_t, 3>{255, 128, 128});
    CHECK(rgb_triple_to_ycbcr(255, 0, 0) == std::array<std::uint8_t, 3>{76, 85, 255});
}

TEST_CASE("ycbcr_to_rgb pins the gray-axis anchors") {
    CHECK(ycbcr_triple_to_rgb(0, 128, 128) == std::array<std::uint8_t, 3>{0, 0, 0});
    CHECK(ycbcr_triple_to_rgb(255, 128, 128) == std::array<std::uint8_t, 3>{255, 255, 255});
}

TEST_CASE("color round-trip error is at most one level per channel") {
    Rng rng(2024);
    for (int i = 0; i < 2000000; ++i) {
        const auto r = static_cast<std::uint8_t>(rng.below(256));
        const auto g = static_cast<std::uint8_t>(rng.below(256));
        const auto b = static_cast<std::uint8_t>(rng.below(256));
        const auto ycc = rgb_triple_to_ycbcr(r, g, b);
        const auto back = ycbcr_triple_to_rgb(ycc[0], ycc[1], ycc[2]);
        REQUIRE(std::abs(int(back[0]) - int(r)) <= 1);
        REQUIRE(std::abs(int(back[1]) - int(g)) <= 1);
        REQUIRE(std::abs(int(back[2]) - int(b)) <= 1);
    }
}

TEST_CASE("whole-image conversion matches the per-triple path") {
    Rng rng(5);
    const Image img = testutil::random_image(rng, 17, 9);
    const YCbCrImage ycc = rgb_to_ycbcr(img);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            const auto t = rgb_triple_to_ycbcr(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            REQUIRE(ycc.y[i] == t[0]);
            REQUIRE(ycc.cb[i] == t[1]);
            REQUIRE(ycc.cr[i] == t[2]);
        }
}

TEST_CASE("image save/load round-trips the exact buffer") {
    testutil::TempDir dir;
    Rng rng(31);
    const Image img = testutil::random_image(rng, 21, 13);
    const std::string path = dir.file("img.png");
    save_image(img, path);
    const Image back = load_image(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("mask save/load is bit-exact") {
    testutil::TempDir dir;
    Rng rng(32);
    const LabelMask mask = testutil::random_mask(rng, 19, 7);
    const std::string path = dir.file("mask.png");
    save_mask(mask, path);
    const LabelMask back = load_mask(path);
    CHECK(back.width == mask.width);
    CHECK(back.height == mask.height);
    CHECK(back.classes == mask.classes);
}

TEST_CASE("palette-encoded masks load when indices stay in range") {
    testutil::TempDir dir;
    const std::string path = dir.file("palette.png");
    std::vector<std::uint8_t> data(5 * 4);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i % 7);
    std::vector<std::array<std::uint8_t, 3>> palette(7);
    for (int i = 0; i < 7; ++i)
        palette[i] = {std::uint8_t(i * 30), std::uint8_t(i * 30), std::uint8_t(i * 30)};
    write_raw_png(path, 5, 4, PNG_COLOR_TYPE_PALETTE, data, 1, palette);
    const LabelMask mask = load_mask(path);
    CHECK(mask.width == 5);
    CHECK(mask.height == 4);
    CHECK(mask.classes == data);
}

TEST_CASE("mask with an out-of-range value reports the pixel coordinate") {
    testutil::TempDir dir;
    const std::string path = dir.file("bad.png");
    std::vector<std::uint8_t> data(4 * 3, 0);
    data[1 * 4 + 2] = 7; // (x=2, y=1)
    write_raw_png(path, 4, 3, PNG_COLOR_TYPE_GRAY, data, 1);
    CHECK_THROWS_WITH_AS(load_mask(path), doctest::Contains("(2,1)"), Error);
}

TEST_CASE("loading rejects images below the 3x3 minimum") {
    testutil::TempDir dir;
    const std::string path = dir.file("tiny.png");
    write_raw_png(path, 1, 1, PNG_COLOR_TYPE_RGB, {128, 128, 128}, 3);
    CHECK_THROWS_WITH_AS(load_image(path), doctest::Contains("3x3 minimum"), Error);
}

TEST_CASE("loading a missing file names the path") {
    CHECK_THROWS_WITH_AS(load_image("/nonexistent/nope.png"), doctest::Contains("nope.png"), Error);
    CHECK_THROWS_WITH_AS(load_mask("/nonexistent/nope.png"), doctest::Contains("nope.png"), Error);
}

TEST_CASE("save_mask rejects out-of-range class values") {
    testutil::TempDir dir;
    LabelMask mask = make_mask(4, 4, 0);
    mask.at(3, 2) = 9;
    CHECK_THROWS_WITH_AS(save_mask(mask, dir.file("m.png")), doctest::Contains("(3,2)"), Error);
}

TEST_CASE("bilinear resize keeps constants constant and identity exact") {
    const Image gray = make_image(8, 8, {77, 77, 77});
    const Image big = resize_bilinear(gray, 256, 256);
    for (std::uint8_t p : big.pixels) REQUIRE(p == 77);

    Rng rng(17);
    const Image img = testutil::random_image(rng, 12, 10);
    const Image same = resize_bilinear(img, 12, 10);
    CHECK(same.pixels == img.pixels);
}

TEST_CASE("bilinear resize of a checkerboard pins the half-half mix to 128") {
    Image cb = make_image(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) cb.at(x, y, c) = ((x + y) % 2 == 0) ? 0 : 255;
    const Image out = resize_bilinear(cb, 3, 3);
    // Center sample lands on the exact midpoint of a 0/255/255/0 cell:
    // (0 + 255 + 255 + 0)/4 = 127.5, which the pinned rounding rule takes
    // to 128.
    CHECK(out.at(1, 1, 0) == 128);
}

TEST_CASE("bilinear resize stays within the source value range") {
    Rng rng(77);
    const Image img = testutil::random_image(rng, 16, 16);
    std::uint8_t lo = 255, hi = 0;
    for (std::uint8_t p : img.pixels) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const Image out = resize_bilinear(img, 7, 5);
    for (std::uint8_t p : out.pixels) {
        REQUIRE(p + 1 >= lo);
        REQUIRE(p <= hi + 1);
    }
}

TEST_CASE("nearest resize replicates blocks and preserves the label set") {
    LabelMask mask = make_mask(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) mask.at(x, y) = static_cast<std::uint8_t>((y * 4 + x) % 7);
    const LabelMask out = resize_nearest(mask, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) REQUIRE(out.at(x, y) == mask.at(x / 2, y / 2));
}

TEST_CASE("resize rejects sub-minimum targets") {
    const Image img = make_image(8, 8);
    CHECK_THROWS_AS(resize_bilinear(img, 2, 8), Error);
    const LabelMask mask = make_mask(8, 8);
    CHECK_THROWS_AS(resize_nearest(mask, 8, 0), Error);
}
