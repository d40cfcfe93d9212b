// Adaptive gamma correction for overexposed micrographs. Luma is
// negated, a weighted histogram CDF is built over the negative plane, and
// a per-pixel power law compresses bright regions while chroma passes
// through untouched. A single adjusted parameter alpha shapes the
// weighting; it is typically tuned per corpus by the optimizer.
#pragma once

#include "flakeseg/image.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace flakeseg {

/// Intensity histogram of one 8-bit plane with its probability density.
struct IntensityHistogram {
    std::array<std::uint64_t, 256> counts{};
    std::array<double, 256> pdf{};
    std::uint64_t total = 0;

    /// Highest occupied intensity level; -1 when the plane is empty.
    int max_level() const {
        for (int l = 255; l >= 0; --l)
            if (counts[l] > 0) return l;
        return -1;
    }
};

/// Adjusted parameter for the weighting distribution.
struct GammaParams {
    double alpha = 0.561; // tuned default; see the optimizer subcommand
    double alpha_max = 10.0;
};

IntensityHistogram build_histogram(const std::vector<std::uint8_t>& plane);

/// out = 255 - in, per pixel.
std::vector<std::uint8_t> negative_luma(const std::vector<std::uint8_t>& y);

/// W(l) = PDF_max * ((PDF(l) - PDF_min) / (PDF_max - PDF_min))^alpha for
/// occupied bins, 0 for unoccupied ones. PDF_min/PDF_max range over the
/// occupied bins only. Throws DegenerateHistogram when every occupied bin
/// is equally likely (no contrast to redistribute).
std::array<double, 256> weighting_distribution(const IntensityHistogram& hist, double alpha);

/// CDF(l) = sum(W[0..l]) / sum(W[0..l_max]); monotone, CDF(l_max) = 1
/// exactly, levels above l_max are filled with 1. Throws
/// DegenerateHistogram when the weights sum to zero.
std::array<double, 256> cumulative_distribution(const std::array<double, 256>& w, int l_max);

/// Per-pixel transform l_max * (l / l_max)^(1 - CDF(l)), quantized with
/// the pinned rounding rule. Requires l_max >= 1.
std::vector<std::uint8_t> gamma_transform(const std::vector<std::uint8_t>& neg_y,
                                          const std::array<double, 256>& cdf, int l_max);

struct EnhanceResult {
    Image image;
    bool degenerate = false;          // histogram had no contrast; image returned unchanged
    double alpha = 0.0;               // parameter actually applied
    std::array<double, 3> saturation_before{}; // oversaturation index per RGB channel
    std::array<double, 3> saturation_after{};
};

/// Full enhancement in YCbCr space: the returned luma is the corrected
/// plane and the chroma planes are bitwise copies of the source's. Sets
/// *degenerate instead of throwing when the histogram carries no
/// contrast (luma is then returned unchanged too).
YCbCrImage enhance_to_ycbcr(const Image& img, const GammaParams& params, bool* degenerate);

/// Enhancement composed back to RGB, with the oversaturation diagnostic
/// measured on both sides. Degenerate inputs come back bitwise unchanged.
EnhanceResult enhance_image(const Image& img, const GammaParams& params);

/// Fraction of pixels in `channel` (0=R, 1=G, 2=B) with intensity
/// strictly above 253.
double oversaturation_index(const Image& img, int channel);

} // namespace flakeseg
