#include "flakeseg/synth.hpp"

#include "flakeseg/common.hpp"
#include "flakeseg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

namespace flakeseg {

namespace {

const std::vector<std::array<double, 3>> kDefaultPalette{
    {150.0, 128.0, 128.0}, // neutral gray
    {145.0, 138.0, 120.0}, // cool bluish
    {140.0, 120.0, 136.0}, // warm reddish
    {155.0, 130.0, 118.0}, // green-leaning
};

void check_config(const SynthConfig& cfg) {
    if (cfg.n_images < 0) throw Error("image count must be non-negative");
    if (cfg.width < kMinImageSide || cfg.height < kMinImageSide) {
        throw Error("synthetic images must be at least " + std::to_string(kMinImageSide) + "x" +
                    std::to_string(kMinImageSide));
    }
    double freq_sum = 0.0;
    for (double f : cfg.frequency) {
        if (f < 0.0) throw Error("class frequencies must be non-negative");
        freq_sum += f;
    }
    if (std::abs(freq_sum - 1.0) > 1e-9) {
        throw Error("class frequencies sum to " + std::to_string(freq_sum) + ", expected 1");
    }
    // Every pair of rendered classes must stay separated in luma.
    for (int a = 0; a < kNumClasses; ++a) {
        if (a > 0 && cfg.frequency[static_cast<std::size_t>(a)] == 0.0) continue;
        for (int b = a + 1; b < kNumClasses; ++b) {
            if (cfg.frequency[static_cast<std::size_t>(b)] == 0.0) continue;
            const double gap = std::abs(cfg.luma_offset[static_cast<std::size_t>(a)] -
                                        cfg.luma_offset[static_cast<std::size_t>(b)]);
            if (gap < cfg.contrast_margin) {
                throw Error("classes " + std::to_string(a) + " and " + std::to_string(b) +
                            " are only " + std::to_string(gap) + " luma apart, margin is " +
                            std::to_string(cfg.contrast_margin));
            }
        }
    }
    if (cfg.min_vertices < 3 || cfg.max_vertices < cfg.min_vertices) {
        throw Error("polygon vertex range is invalid");
    }
    if (!(cfg.min_radius_frac > 0.0) || cfg.max_radius_frac < cfg.min_radius_frac) {
        throw Error("polygon radius range is invalid");
    }
    if (cfg.overexposure_fraction < 0.0 || cfg.overexposure_fraction > 1.0) {
        throw Error("overexposure fraction must be in [0,1]");
    }
    if (cfg.overexposure_gain_lo < 1.0 || cfg.overexposure_gain_hi < cfg.overexposure_gain_lo) {
        throw Error("overexposure gain range is invalid");
    }
    if (cfg.vignette_strength < 0.0 || cfg.vignette_strength >= 1.0) {
        throw Error("vignette strength must be in [0,1)");
    }
    if (cfg.noise_sigma < 0.0) throw Error("noise sigma must be non-negative");
    for (const auto& tint : cfg.palette) {
        for (double v : tint) {
            if (v < 0.0 || v > 255.0) throw Error("palette tints must lie in [0,255]");
        }
    }
}

struct Point {
    double x, y;
};

/// Convex polygon: vertices sampled in parameter order on a rotated
/// ellipse, so the hull property is automatic. The radius range is capped by
/// `remaining` (an area budget in pixels) so the final flake of a class can
/// shrink to fit instead of overshooting by a whole polygon.
std::vector<Point> random_polygon(Rng& rng, const SynthConfig& cfg, double remaining) {
    constexpr double kPi = 3.14159265358979323846;
    const double scale = static_cast<double>(std::min(cfg.width, cfg.height));
    const double cx = rng.uniform(0.0, static_cast<double>(cfg.width));
    const double cy = rng.uniform(0.0, static_cast<double>(cfg.height));
    const double r_budget = std::max(std::sqrt(std::max(remaining, 0.0) / kPi), 1.5);
    const double r_hi = std::min(cfg.max_radius_frac * scale, r_budget);
    const double r_lo = std::min(cfg.min_radius_frac * scale, r_hi);
    const double a = rng.uniform(r_lo, r_hi);
    const double b = rng.uniform(r_lo, r_hi);
    const double rot = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const int n = cfg.min_vertices +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_vertices - cfg.min_vertices + 1)));
    std::vector<Point> poly(static_cast<std::size_t>(n));
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (int j = 0; j < n; ++j) {
        const double phi = 2.0 * 3.14159265358979323846 *
                           (static_cast<double>(j) + 0.9 * rng.uniform()) / static_cast<double>(n);
        const double ex = a * std::cos(phi);
        const double ey = b * std::sin(phi);
        poly[static_cast<std::size_t>(j)] = {cx + ex * cr - ey * sr, cy + ex * sr + ey * cr};
    }
    return poly;
}

bool inside_convex(const std::vector<Point>& poly, double px, double py) {
    int sign = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p1 = poly[i];
        const Point& p2 = poly[(i + 1) % n];
        const double cross = (p2.x - p1.x) * (py - p1.y) - (p2.y - p1.y) * (px - p1.x);
        if (cross > 0.0) {
            if (sign < 0) return false;
            sign = 1;
        } else if (cross < 0.0) {
            if (sign > 0) return false;
            sign = -1;
        }
    }
    return true;
}

SynthItem render_one(const SynthConfig& cfg, std::uint64_t index) {
    Rng rng(mix_seed(cfg.seed, {index}));
    const int w = cfg.width, h = cfg.height;
    const std::size_t n_px = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

    const auto& palette = cfg.palette.empty() ? kDefaultPalette : cfg.palette;
    const std::array<double, 3> tint = palette[rng.below(palette.size())];

    std::vector<double> plane_y(n_px, tint[0]);
    std::vector<double> plane_cb(n_px, tint[1]);
    std::vector<double> plane_cr(n_px, tint[2]);
    LabelMask mask = make_mask(w, h, 0);

    // Flakes, lowest class first so thicker layers paint over thinner ones.
    for (int k = 1; k < kNumClasses; ++k) {
        const double freq = cfg.frequency[static_cast<std::size_t>(k)];
        if (freq <= 0.0) continue;
        const double budget = freq * static_cast<double>(n_px) * rng.uniform(0.75, 1.25);
        double painted = 0.0;
        int attempts = 0;
        while (painted < budget && attempts < 4096) {
            ++attempts;
            const std::vector<Point> poly = random_polygon(rng, cfg, budget - painted);
            double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
            for (const Point& p : poly) {
                lo_x = std::min(lo_x, p.x);
                hi_x = std::max(hi_x, p.x);
                lo_y = std::min(lo_y, p.y);
                hi_y = std::max(hi_y, p.y);
            }
            const int x0 = std::max(0, static_cast<int>(std::floor(lo_x)));
            const int x1 = std::min(w - 1, static_cast<int>(std::ceil(hi_x)));
            const int y0 = std::max(0, static_cast<int>(std::floor(lo_y)));
            const int y1 = std::min(h - 1, static_cast<int>(std::ceil(hi_y)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (!inside_convex(poly, x + 0.5, y + 0.5)) continue;
                    if (mask.at(x, y) != k) {
                        mask.at(x, y) = static_cast<std::uint8_t>(k);
                        painted += 1.0;
                    }
                    const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                          static_cast<std::size_t>(x);
                    plane_y[i] = tint[0] + cfg.luma_offset[static_cast<std::size_t>(k)];
                    plane_cb[i] = tint[1] + cfg.cb_offset[static_cast<std::size_t>(k)];
                    plane_cr[i] = tint[2] + cfg.cr_offset[static_cast<std::size_t>(k)];
                }
            }
        }
    }

    if (cfg.vignette_strength > 0.0) {
        const double mid_x = (w - 1) / 2.0, mid_y = (h - 1) / 2.0;
        const double r_max_sq = mid_x * mid_x + mid_y * mid_y;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double r_sq = (x - mid_x) * (x - mid_x) + (y - mid_y) * (y - mid_y);
                plane_y[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                        static_cast<std::size_t>(x)] *=
                    1.0 - cfg.vignette_strength * r_sq / r_max_sq;
            }
        }
    }

    // Draw the overexposure decision and gain unconditionally so streams
    // stay aligned across fraction settings.
    const bool overexposed = rng.uniform() < cfg.overexposure_fraction;
    const double gain = rng.uniform(cfg.overexposure_gain_lo, cfg.overexposure_gain_hi);
    if (overexposed) {
        for (double& v : plane_y) v = std::min(255.0, v * gain);
    }

    Image img = make_image(w, h);
    for (std::size_t i = 0; i < n_px; ++i) {
        const auto rgb =
            ycbcr_triple_to_rgb(clamp_u8(plane_y[i]), clamp_u8(plane_cb[i]), clamp_u8(plane_cr[i]));
        img.pixels[3 * i + 0] = rgb[0];
        img.pixels[3 * i + 1] = rgb[1];
        img.pixels[3 * i + 2] = rgb[2];
    }
    if (cfg.noise_sigma > 0.0) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = clamp_u8(static_cast<double>(img.pixels[i]) +
                                     rng.normal() * cfg.noise_sigma);
        }
    }
    return {std::move(img), std::move(mask)};
}

} // namespace

std::vector<SynthItem> generate(const SynthConfig& cfg) {
    check_config(cfg);
    std::vector<SynthItem> items(static_cast<std::size_t>(cfg.n_images));
    parallel_for(items.size(), cfg.jobs,
                 [&](std::size_t i) { items[i] = render_one(cfg, static_cast<std::uint64_t>(i)); });
    return items;
}

DatasetManifest generate_corpus(const SynthConfig& cfg, const std::string& dir) {
    const std::vector<SynthItem> items = generate(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base = fs::absolute(dir);
    DatasetManifest manifest;
    manifest.records.resize(items.size());
    parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%04zu.png", i);
        const std::string img_path = (base / name).string();
        std::snprintf(name, sizeof(name), "mask_%04zu.png", i);
        const std::string mask_path = (base / name).string();
        save_image(items[i].image, img_path);
        save_mask(items[i].mask, mask_path);
        manifest.records[i].image = img_path;
        manifest.records[i].mask = mask_path;
    });
    save_manifest(manifest, (base / "manifest.jsonl").string());
    return manifest;
}

bool corpus_stats_match(const DatasetManifest& manifest,
                        const std::array<double, kNumClasses>& target, double tol) {
    const DatasetStats stats = dataset_stats(manifest);
    for (int k = 0; k < kNumClasses; ++k) {
        if (std::abs(stats.mean[static_cast<std::size_t>(k)] - target[static_cast<std::size_t>(k)]) >
            tol) {
            return false;
        }
    }
    return true;
}

} // namespace flakeseg
