// Dataset-level operations: per-image and corpus class-weight statistics,
// iterative stratification into label-balanced subsets, and the geometric
// + photometric augmentation pipeline applied identically to each
// image/mask pair.
#pragma once

#include "flakeseg/common.hpp"
#include "flakeseg/image.hpp"
#include "flakeseg/manifest.hpp"

#include <array>
#include <utility>
#include <vector>

namespace flakeseg {

/// Per-class pixel fractions of one mask; entries sum to 1.
struct ClassWeights {
    std::array<double, kNumClasses> w{};
};

ClassWeights class_weights(const LabelMask& mask);

/// The four corpus statistics per class, over per-image weights.
struct DatasetStats {
    std::array<double, kNumClasses> mean{};
    std::array<double, kNumClasses> median{};
    std::array<double, kNumClasses> max_weight{};
    std::array<double, kNumClasses> zero_fraction{}; // share of images where the class is absent
};

/// Statistics over all manifest records (each must carry a mask).
DatasetStats dataset_stats(const DatasetManifest& manifest);

/// Labels present in a mask: classes with nonzero pixel weight.
std::vector<int> label_set(const LabelMask& mask);

struct StratifiedSplit {
    std::vector<std::vector<std::size_t>> subsets; // record indices per subset
    std::vector<double> target_proportions;
};

/// Greedy rarest-label-first stratification over explicit label sets:
/// repeatedly take the label with the fewest unassigned examples and give
/// each of its examples (ascending index) to the subset with the greatest
/// remaining demand for that label; ties fall to the subset with the
/// greatest total remaining demand, then to a seeded random choice.
/// Zero-proportion subsets are skipped; examples with empty label sets
/// are placed by total demand at the end.
StratifiedSplit stratify_label_sets(const std::vector<std::vector<int>>& labels,
                                    const std::vector<double>& proportions, std::uint64_t seed);

/// Stratification over a manifest: label sets are read from the mask
/// files. Proportions must sum to 1.
StratifiedSplit iterative_stratify(const DatasetManifest& manifest,
                                   const std::vector<double>& proportions, std::uint64_t seed);

struct AugmentConfig {
    int resize_w = 320; // upscale target before cropping back down
    int resize_h = 256;
    int crop_w = 256;   // expected input dims and crop/output dims
    int crop_h = 256;
    double flip_prob = 0.5;        // horizontal and vertical, drawn separately
    double photometric_prob = 0.5; // image-only color jitter
    double brightness_delta = 32.0;   // luma shift range, +/-
    double contrast_lo = 0.5;         // luma scale around 128
    double contrast_hi = 1.5;
    double saturation_lo = 0.5;       // chroma scale around 128
    double saturation_hi = 1.5;
    double hue_delta = 18.0;          // chroma-plane rotation, +/- in 0..255 angle units
};

/// One augmentation draw. Geometry (resize, shared random crop, flips)
/// hits image and mask identically; photometric jitter (brightness,
/// contrast, saturation, hue in YCbCr space) only ever touches the image.
/// The RNG consumption is fixed per call regardless of which gates fire,
/// so streams stay aligned across configurations.
std::pair<Image, LabelMask> augment(const Image& img, const LabelMask& mask,
                                    const AugmentConfig& cfg, Rng& rng);

} // namespace flakeseg
