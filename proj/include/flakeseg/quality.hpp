// Noise-aware image quality score combining three sub-metrics: edge
// information (log-compressed Sobel gradients pooled over a grid),
// histogram entropy of the luma plane, and a per-channel Gaussian noise
// estimate restricted to homogeneous, well-exposed pixels. The combined
// score rewards texture and penalizes noise, making it usable as an
// optimization objective for the enhancement parameter.
#pragma once

#include "flakeseg/image.hpp"

#include <cmath>
#include <vector>

namespace flakeseg {

struct QualityConfig {
    double lambda = 1000.0;   // log-compression strength for gradients
    double gamma_act = 0.06;  // activation threshold: gradients at or below it carry no information
    int grid_rows = 10;       // gradient pooling grid
    int grid_cols = 10;
    double k_g = 1.0;         // gradient metric scale
    double k_e = 1.0 / 8.0;   // entropy normalization (1/8 maps 8 bits onto [0,1])
    int tau_l = 5;            // well-exposed luma range for the noise mask
    int tau_u = 250;
    double delta_hom = -1.0;  // homogeneity threshold; negative = adaptive (mean gradient)
    double a = 0.4;           // weight of the gradient metric
    double b = 0.6;           // weight of the entropy metric
    double c = 0.6;           // weight of the noise metric (subtracted)
    double noise_penalty = 255.0 * 3; // noise metric when no pixel qualifies for estimation
};

struct QualityReport {
    double m_gradient = 0.0;
    double m_entropy = 0.0;
    double m_noise = 0.0;
    double score = 0.0;
    bool gradient_degenerate = false; // all grid cells equal; metric forced to 0
    bool noise_mask_empty = false;    // no homogeneous well-exposed pixels; penalty applied
};

/// Sobel gradient magnitudes of an 8-bit plane, normalized to [0,1] by
/// the kernel's theoretical maximum response (replicate border).
std::vector<double> normalized_gradient(const std::vector<std::uint8_t>& plane, int width,
                                        int height);

/// Pointwise gradient-information transfer: log(lambda*(g - gamma) + 1)
/// normalized so g = 1 maps to exactly 1; zero at or below the activation
/// threshold.
inline double gradient_information(double g, const QualityConfig& cfg) {
    if (g <= cfg.gamma_act) return 0.0;
    const double n_g = std::log(cfg.lambda * (1.0 - cfg.gamma_act) + 1.0);
    return std::log(cfg.lambda * (g - cfg.gamma_act) + 1.0) / n_g;
}

/// Grid-pooled edge metric k_g * E(G)/S(G); 0 when all cells are equal
/// (sets *degenerate when provided).
double gradient_metric(const Image& img, const QualityConfig& cfg, bool* degenerate = nullptr);

/// -k_e * sum P(i) log2 P(i) over the luma histogram.
double entropy_metric(const Image& img, const QualityConfig& cfg);

/// Sum over RGB channels of the Gaussian noise level estimated from the
/// absolute response to the 3x3 noise kernel, over interior pixels that
/// are homogeneous (luma gradient <= delta) and well exposed
/// (tau_l <= luma <= tau_u). Falls back to the configured penalty when no
/// pixel qualifies (sets *mask_empty when provided). `per_channel`, when
/// given, receives the three sigma estimates.
double noise_metric(const Image& img, const QualityConfig& cfg, bool* mask_empty = nullptr,
                    std::array<double, 3>* per_channel = nullptr);

/// f = a*m_gradient + b*m_entropy - c*m_noise.
QualityReport quality_score(const Image& img, const QualityConfig& cfg = {});

} // namespace flakeseg
