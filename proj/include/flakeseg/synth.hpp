// Deterministic synthetic micrograph generator: tinted backgrounds, convex
// flake polygons with class-specific color offsets (monotone in layer
// count), optional vignetting, overexposure and Gaussian noise, with exact
// paired masks. Class areas follow an imbalanced frequency profile.
#pragma once

#include "flakeseg/datasetops.hpp"
#include "flakeseg/image.hpp"
#include "flakeseg/manifest.hpp"

#include <array>
#include <string>
#include <vector>

namespace flakeseg {

struct SynthConfig {
    int n_images = 20;
    int width = 96;
    int height = 96;
    /// Background tints (Y, Cb, Cr), one drawn per image; empty uses a
    /// built-in set emulating different microscope settings.
    std::vector<std::array<double, 3>> palette;
    /// Per-class color offsets relative to the background tint. Class 0 is
    /// the background itself; classes 1..6 darken monotonically with layer
    /// count and shift chroma slightly.
    std::array<double, kNumClasses> luma_offset{0.0, -18.0, -27.0, -36.0, -45.0, -54.0, -63.0};
    std::array<double, kNumClasses> cb_offset{0.0, 5.0, 8.0, 10.0, 12.0, 14.0, 16.0};
    std::array<double, kNumClasses> cr_offset{0.0, -3.0, -5.0, -6.0, -8.0, -9.0, -11.0};
    /// Target share of pixels per class, imbalanced like real corpora.
    // Flake shares mirror the imbalance of real corpora; background takes the
    // exact remainder so the profile satisfies the sum-to-one contract.
    std::array<double, kNumClasses> frequency{0.919, 0.006, 0.018, 0.007, 0.007, 0.005, 0.038};
    /// Minimum pairwise luma separation between class offsets.
    double contrast_margin = 6.0;
    /// Share of images rendered overexposed (luma gain then clipping).
    double overexposure_fraction = 0.0;
    double overexposure_gain_lo = 1.15;
    double overexposure_gain_hi = 1.85;
    double vignette_strength = 0.0; // 0..1 radial luma falloff
    double noise_sigma = 0.0;       // Gaussian noise per RGB channel
    int min_vertices = 3;
    int max_vertices = 8;
    double min_radius_frac = 0.05; // polygon semi-axis range, of min(W,H)
    double max_radius_frac = 0.16;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct SynthItem {
    Image image;
    LabelMask mask;
};

/// In-memory corpus; item i depends only on the seed and i.
std::vector<SynthItem> generate(const SynthConfig& cfg);

/// Renders the corpus into dir as img_NNNN.png / mask_NNNN.png, saves
/// dir/manifest.jsonl, and returns the manifest with absolute paths.
DatasetManifest generate_corpus(const SynthConfig& cfg, const std::string& dir);

/// Whether the corpus's mean class weights are all within tol of target.
bool corpus_stats_match(const DatasetManifest& manifest,
                        const std::array<double, kNumClasses>& target, double tol);

} // namespace flakeseg
