#include "flakeseg/enhance.hpp"

#include <cmath>
#include <string>

namespace flakeseg {

IntensityHistogram build_histogram(const std::vector<std::uint8_t>& plane) {
    IntensityHistogram hist;
    for (std::uint8_t v : plane) ++hist.counts[v];
    hist.total = plane.size();
    if (hist.total > 0)
        for (int l = 0; l < 256; ++l)
            hist.pdf[l] = static_cast<double>(hist.counts[l]) / static_cast<double>(hist.total);
    return hist;
}

std::vector<std::uint8_t> negative_luma(const std::vector<std::uint8_t>& y) {
    std::vector<std::uint8_t> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = static_cast<std::uint8_t>(255 - y[i]);
    return out;
}

std::array<double, 256> weighting_distribution(const IntensityHistogram& hist, double alpha) {
    if (!(alpha > 0.0)) throw Error("alpha must be positive, got " + std::to_string(alpha));
    double pdf_min = 2.0, pdf_max = -1.0;
    for (int l = 0; l < 256; ++l) {
        if (hist.counts[l] == 0) continue;
        pdf_min = std::min(pdf_min, hist.pdf[l]);
        pdf_max = std::max(pdf_max, hist.pdf[l]);
    }
    if (pdf_max < 0.0) throw Error("empty histogram");
    if (pdf_max == pdf_min) throw DegenerateHistogram();

    std::array<double, 256> w{};
    for (int l = 0; l < 256; ++l) {
        if (hist.counts[l] == 0) continue; // unoccupied bins carry no weight
        w[l] = pdf_max * std::pow((hist.pdf[l] - pdf_min) / (pdf_max - pdf_min), alpha);
    }
    return w;
}

std::array<double, 256> cumulative_distribution(const std::array<double, 256>& w, int l_max) {
    if (l_max < 0 || l_max > 255)
        throw Error("l_max out of range: " + std::to_string(l_max));
    double total = 0.0;
    for (int l = 0; l <= l_max; ++l) total += w[l];
    if (total <= 0.0) throw DegenerateHistogram();

    std::array<double, 256> cdf{};
    double run = 0.0;
    for (int l = 0; l <= l_max; ++l) {
        run += w[l];
        cdf[l] = run / total;
    }
    cdf[l_max] = 1.0; // exact endpoint regardless of accumulation error
    for (int l = l_max + 1; l < 256; ++l) cdf[l] = 1.0;
    return cdf;
}

std::vector<std::uint8_t> gamma_transform(const std::vector<std::uint8_t>& neg_y,
                                          const std::array<double, 256>& cdf, int l_max) {
    if (l_max < 1) throw Error("gamma transform needs l_max >= 1, got " + std::to_string(l_max));

    // One table entry per intensity level; every pixel with the same value
    // maps identically.
    std::array<std::uint8_t, 256> lut{};
    for (int l = 0; l <= l_max; ++l) {
        const double ratio = static_cast<double>(l) / l_max;
        // pow(0, 0) == 1 here, so a level with CDF exactly 1 maps to l_max
        // even at l = 0.
        const double out = l_max * std::pow(ratio, 1.0 - cdf[l]);
        lut[l] = clamp_u8(out);
    }
    for (int l = l_max + 1; l < 256; ++l) lut[l] = static_cast<std::uint8_t>(l_max);

    std::vector<std::uint8_t> out(neg_y.size());
    for (std::size_t i = 0; i < neg_y.size(); ++i) out[i] = lut[neg_y[i]];
    return out;
}

YCbCrImage enhance_to_ycbcr(const Image& img, const GammaParams& params, bool* degenerate) {
    check_image(img);
    if (!(params.alpha > 0.0) || params.alpha > params.alpha_max)
        throw Error("alpha must lie in (0, " + std::to_string(params.alpha_max) + "], got " +
                    std::to_string(params.alpha));
    if (degenerate) *degenerate = false;

    YCbCrImage ycc = rgb_to_ycbcr(img);
    const std::vector<std::uint8_t> neg = negative_luma(ycc.y);
    const IntensityHistogram hist = build_histogram(neg);
    try {
        const auto w = weighting_distribution(hist, params.alpha);
        const int l_max = hist.max_level();
        const auto cdf = cumulative_distribution(w, l_max);
        const std::vector<std::uint8_t> corrected = gamma_transform(neg, cdf, l_max);
        ycc.y = negative_luma(corrected);
    } catch (const DegenerateHistogram&) {
        if (degenerate) *degenerate = true;
        // luma stays as converted; chroma untouched
    }
    return ycc;
}

EnhanceResult enhance_image(const Image& img, const GammaParams& params) {
    EnhanceResult result;
    result.alpha = params.alpha;
    for (int c = 0; c < 3; ++c) result.saturation_before[c] = oversaturation_index(img, c);

    bool degenerate = false;
    const YCbCrImage ycc = enhance_to_ycbcr(img, params, &degenerate);
    result.degenerate = degenerate;
    // The degenerate path returns the input bitwise, skipping the RGB
    // round trip that could perturb values by one level.
    result.image = degenerate ? img : ycbcr_to_rgb(ycc);

    for (int c = 0; c < 3; ++c) result.saturation_after[c] = oversaturation_index(result.image, c);
    return result;
}

double oversaturation_index(const Image& img, int channel) {
    check_image(img);
    if (channel < 0 || channel > 2)
        throw Error("channel must be 0, 1, or 2, got " + std::to_string(channel));
    std::size_t over = 0;
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        if (img.pixels[i * 3 + channel] > 253) ++over;
    return static_cast<double>(over) / static_cast<double>(n);
}

} // namespace flakeseg
