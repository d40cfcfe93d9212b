#include "flakeseg/quality.hpp"

#include <cmath>
#include <string>

namespace flakeseg {

namespace {

// Largest possible Sobel magnitude on an 8-bit plane: each axis kernel
// sums to +/-4*255 at most, and the two axes combine in quadrature.
const double kSobelMax = 4.0 * 255.0 * std::sqrt(2.0);

void check_config(const QualityConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw Error("lambda must be positive");
    if (!(cfg.gamma_act > 0.0 && cfg.gamma_act < 1.0))
        throw Error("activation threshold must lie in (0,1)");
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1) throw Error("pooling grid must be at least 1x1");
    if (cfg.a < 0.0 || cfg.b < 0.0 || cfg.c < 0.0)
        throw Error("combination weights must be non-negative");
    if (cfg.tau_l >= cfg.tau_u) throw Error("tau_l must be below tau_u");
}

inline int clamp_index(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

std::vector<std::uint8_t> luma_plane(const Image& img) {
    return rgb_to_ycbcr(img).y;
}

} // namespace

std::vector<double> normalized_gradient(const std::vector<std::uint8_t>& plane, int width,
                                        int height) {
    std::vector<double> g(plane.size());
    auto at = [&](int x, int y) {
        return static_cast<double>(plane[static_cast<std::size_t>(clamp_index(y, height - 1)) * width +
                                         clamp_index(x, width - 1)]);
    };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double gx = -at(x - 1, y - 1) + at(x + 1, y - 1) - 2.0 * at(x - 1, y) +
                              2.0 * at(x + 1, y) - at(x - 1, y + 1) + at(x + 1, y + 1);
            const double gy = -at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1) +
                              at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1);
            g[static_cast<std::size_t>(y) * width + x] = std::sqrt(gx * gx + gy * gy) / kSobelMax;
        }
    }
    return g;
}

double gradient_metric(const Image& img, const QualityConfig& cfg, bool* degenerate) {
    check_image(img);
    check_config(cfg);
    if (degenerate) *degenerate = false;

    const std::vector<std::uint8_t> luma = luma_plane(img);
    const std::vector<double> g = normalized_gradient(luma, img.width, img.height);

    const int cells = cfg.grid_rows * cfg.grid_cols;
    std::vector<double> pooled(cells, 0.0);
    for (int y = 0; y < img.height; ++y) {
        const int cy = y * cfg.grid_rows / img.height;
        for (int x = 0; x < img.width; ++x) {
            const int cx = x * cfg.grid_cols / img.width;
            pooled[cy * cfg.grid_cols + cx] +=
                gradient_information(g[static_cast<std::size_t>(y) * img.width + x], cfg);
        }
    }

    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= cells;
    double var = 0.0;
    for (double v : pooled) var += (v - mean) * (v - mean);
    var /= cells;
    const double stddev = std::sqrt(var);
    if (stddev == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return cfg.k_g * mean / stddev;
}

double entropy_metric(const Image& img, const QualityConfig& cfg) {
    check_image(img);
    check_config(cfg);
    const std::vector<std::uint8_t> luma = luma_plane(img);
    std::array<std::uint64_t, 256> counts{};
    for (std::uint8_t v : luma) ++counts[v];
    const double total = static_cast<double>(luma.size());
    double entropy = 0.0;
    for (std::uint64_t c : counts) {
        if (c == 0) continue; // 0 * log 0 := 0
        const double p = static_cast<double>(c) / total;
        entropy -= p * std::log2(p);
    }
    return cfg.k_e * entropy;
}

double noise_metric(const Image& img, const QualityConfig& cfg, bool* mask_empty,
                    std::array<double, 3>* per_channel) {
    check_image(img);
    check_config(cfg);
    if (mask_empty) *mask_empty = false;
    if (per_channel) per_channel->fill(0.0);

    const std::vector<std::uint8_t> luma = luma_plane(img);
    const std::vector<double> g = normalized_gradient(luma, img.width, img.height);

    double delta = cfg.delta_hom;
    if (delta < 0.0) {
        // Adaptive threshold: the image's own mean gradient magnitude.
        double sum = 0.0;
        for (double v : g) sum += v;
        delta = sum / static_cast<double>(g.size());
    }

    // Valid pixels need the full 3x3 kernel support, a homogeneous
    // neighborhood, and a well-exposed luma value. The mask is shared by
    // all three channels.
    std::vector<std::uint8_t> valid(luma.size(), 0);
    std::size_t n_p = 0;
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            if (g[i] > delta) continue;
            if (luma[i] < cfg.tau_l || luma[i] > cfg.tau_u) continue;
            valid[i] = 1;
            ++n_p;
        }
    }
    if (n_p == 0) {
        if (mask_empty) *mask_empty = true;
        if (per_channel) per_channel->fill(cfg.noise_penalty / 3.0);
        return cfg.noise_penalty;
    }

    // 3x3 noise estimation kernel: second-difference in both axes; its
    // response to i.i.d. Gaussian noise has a known absolute moment, which
    // the sqrt(pi/2)/6 factor turns into an unbiased sigma estimate.
    static constexpr int kKernel[3][3] = {{1, -2, 1}, {-2, 4, -2}, {1, -2, 1}};
    double m_noise = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int y = 1; y < img.height - 1; ++y) {
            for (int x = 1; x < img.width - 1; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
                if (!valid[i]) continue;
                double conv = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        conv += kKernel[dy + 1][dx + 1] * static_cast<double>(img.at(x + dx, y + dy, ch));
                acc += std::abs(conv);
            }
        }
        const double sigma =
            std::sqrt(3.14159265358979323846 / 2.0) * acc / (6.0 * static_cast<double>(n_p));
        if (per_channel) (*per_channel)[ch] = sigma;
        m_noise += sigma;
    }
    return m_noise;
}

QualityReport quality_score(const Image& img, const QualityConfig& cfg) {
    QualityReport report;
    report.m_gradient = gradient_metric(img, cfg, &report.gradient_degenerate);
    report.m_entropy = entropy_metric(img, cfg);
    report.m_noise = noise_metric(img, cfg, &report.noise_mask_empty);
    report.score = cfg.a * report.m_gradient + cfg.b * report.m_entropy - cfg.c * report.m_noise;
    return report;
}

} // namespace flakeseg
