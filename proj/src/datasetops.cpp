#include "flakeseg/datasetops.hpp"

#include "flakeseg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>

namespace flakeseg {

namespace {

constexpr double kProportionTol = 1e-9;

void validate_proportions(const std::vector<double>& proportions) {
    if (proportions.size() < 2) {
        throw Error("stratification needs at least 2 subsets, got " +
                    std::to_string(proportions.size()));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < proportions.size(); ++j) {
        if (!(proportions[j] >= 0.0)) {
            throw Error("subset proportion " + std::to_string(j) + " is negative");
        }
        total += proportions[j];
    }
    if (std::abs(total - 1.0) > kProportionTol) {
        throw Error("subset proportions sum to " + std::to_string(total) + ", expected 1");
    }
}

double median_of_sorted(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Image crop_image(const Image& img, int x0, int y0, int w, int h) {
    Image out = make_image(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
        }
    }
    return out;
}

LabelMask crop_mask(const LabelMask& mask, int x0, int y0, int w, int h) {
    LabelMask out = make_mask(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(x, y) = mask.at(x0 + x, y0 + y);
    }
    return out;
}

void flip_horizontal(Image& img) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width / 2; ++x) {
            for (int c = 0; c < 3; ++c)
                std::swap(img.at(x, y, c), img.at(img.width - 1 - x, y, c));
        }
    }
}

void flip_horizontal(LabelMask& mask) {
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width / 2; ++x)
            std::swap(mask.at(x, y), mask.at(mask.width - 1 - x, y));
    }
}

void flip_vertical(Image& img) {
    for (int y = 0; y < img.height / 2; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c)
                std::swap(img.at(x, y, c), img.at(x, img.height - 1 - y, c));
        }
    }
}

void flip_vertical(LabelMask& mask) {
    for (int y = 0; y < mask.height / 2; ++y) {
        for (int x = 0; x < mask.width; ++x)
            std::swap(mask.at(x, y), mask.at(x, mask.height - 1 - y));
    }
}

/// Brightness/contrast on luma, saturation/hue on chroma, all in double
/// precision on the YCbCr planes with a single quantization at the end.
Image photometric_jitter(const Image& img, double brightness, double contrast,
                         double saturation, double hue_units) {
    const YCbCrImage ycc = rgb_to_ycbcr(img);
    const std::size_t n = ycc.y.size();
    const double theta = hue_units / 256.0 * 2.0 * 3.14159265358979323846;
    const double ct = std::cos(theta), st = std::sin(theta);
    Image out = make_image(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i) {
        double y = static_cast<double>(ycc.y[i]) + brightness;
        y = (y - 128.0) * contrast + 128.0;
        double cb = (static_cast<double>(ycc.cb[i]) - 128.0) * saturation;
        double cr = (static_cast<double>(ycc.cr[i]) - 128.0) * saturation;
        const double cb2 = cb * ct - cr * st;
        const double cr2 = cb * st + cr * ct;
        const auto rgb = ycbcr_triple_to_rgb(clamp_u8(y), clamp_u8(cb2 + 128.0),
                                             clamp_u8(cr2 + 128.0));
        out.pixels[3 * i + 0] = rgb[0];
        out.pixels[3 * i + 1] = rgb[1];
        out.pixels[3 * i + 2] = rgb[2];
    }
    return out;
}

} // namespace

ClassWeights class_weights(const LabelMask& mask) {
    check_mask(mask);
    std::array<std::size_t, kNumClasses> counts{};
    for (std::uint8_t v : mask.classes) ++counts[v];
    ClassWeights result;
    const double total = static_cast<double>(mask.classes.size());
    for (int k = 0; k < kNumClasses; ++k) result.w[k] = static_cast<double>(counts[k]) / total;
    return result;
}

DatasetStats dataset_stats(const DatasetManifest& manifest) {
    if (manifest.empty()) throw Error("dataset statistics need at least one record");
    std::vector<ClassWeights> weights;
    weights.reserve(manifest.size());
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.has_mask()) {
            throw Error("record " + rec.image + " has no mask; statistics need labels");
        }
        weights.push_back(class_weights(load_mask(rec.mask)));
    }
    DatasetStats stats;
    const double n = static_cast<double>(weights.size());
    for (int k = 0; k < kNumClasses; ++k) {
        std::vector<double> column;
        column.reserve(weights.size());
        double sum = 0.0, maxw = 0.0;
        std::size_t zeros = 0;
        for (const ClassWeights& cw : weights) {
            const double w = cw.w[k];
            column.push_back(w);
            sum += w;
            maxw = std::max(maxw, w);
            if (w == 0.0) ++zeros;
        }
        stats.mean[k] = sum / n;
        stats.median[k] = median_of_sorted(column);
        stats.max_weight[k] = maxw;
        stats.zero_fraction[k] = static_cast<double>(zeros) / n;
    }
    return stats;
}

std::vector<int> label_set(const LabelMask& mask) {
    const ClassWeights cw = class_weights(mask);
    std::vector<int> labels;
    for (int k = 0; k < kNumClasses; ++k) {
        if (cw.w[k] > 0.0) labels.push_back(k);
    }
    return labels;
}

StratifiedSplit stratify_label_sets(const std::vector<std::vector<int>>& labels,
                                    const std::vector<double>& proportions,
                                    std::uint64_t seed) {
    if (labels.empty()) throw Error("stratification needs at least one example");
    validate_proportions(proportions);

    const std::size_t n = labels.size();
    const std::size_t n_subsets = proportions.size();

    // The label universe and, per label, how many examples carry it.
    int max_label = -1;
    for (const auto& ls : labels) {
        for (int l : ls) {
            if (l < 0) throw Error("negative label in stratification input");
            max_label = std::max(max_label, l);
        }
    }
    const int n_labels = max_label + 1;

    std::vector<std::size_t> label_count(static_cast<std::size_t>(std::max(n_labels, 1)), 0);
    for (const auto& ls : labels) {
        for (int l : ls) ++label_count[static_cast<std::size_t>(l)];
    }

    // Remaining demand per subset: c[j][l] examples of label l, t[j] in total.
    std::vector<std::vector<double>> c(n_subsets,
                                       std::vector<double>(static_cast<std::size_t>(std::max(n_labels, 1)), 0.0));
    std::vector<double> t(n_subsets, 0.0);
    std::vector<std::size_t> active; // subsets with positive proportion
    for (std::size_t j = 0; j < n_subsets; ++j) {
        if (proportions[j] <= 0.0) continue;
        active.push_back(j);
        t[j] = static_cast<double>(n) * proportions[j];
        for (int l = 0; l < n_labels; ++l) {
            c[j][static_cast<std::size_t>(l)] =
                static_cast<double>(label_count[static_cast<std::size_t>(l)]) * proportions[j];
        }
    }
    if (active.empty()) throw Error("all subset proportions are zero");

    std::vector<int> assignment(n, -1);
    std::vector<std::size_t> remaining(label_count); // unassigned examples per label
    Rng rng(mix_seed(seed, {0x73747261u})); // tie-breaks only

    const auto pick_subset = [&](int label) {
        // Greatest remaining demand for the label (or total demand when
        // placing an unlabeled example), then greatest total demand, then
        // a seeded random choice among the tied subsets.
        std::vector<std::size_t> tied;
        double best = -1e300;
        for (std::size_t j : active) {
            const double key = label >= 0 ? c[j][static_cast<std::size_t>(label)] : t[j];
            if (key > best + 1e-12) {
                best = key;
                tied.assign(1, j);
            } else if (key >= best - 1e-12) {
                tied.push_back(j);
            }
        }
        if (tied.size() > 1 && label >= 0) {
            std::vector<std::size_t> narrowed;
            double best_t = -1e300;
            for (std::size_t j : tied) {
                if (t[j] > best_t + 1e-12) {
                    best_t = t[j];
                    narrowed.assign(1, j);
                } else if (t[j] >= best_t - 1e-12) {
                    narrowed.push_back(j);
                }
            }
            tied = std::move(narrowed);
        }
        if (tied.size() == 1) return tied[0];
        return tied[rng.below(tied.size())];
    };

    const auto assign = [&](std::size_t i, std::size_t j) {
        assignment[i] = static_cast<int>(j);
        for (int l : labels[i]) {
            c[j][static_cast<std::size_t>(l)] -= 1.0;
            --remaining[static_cast<std::size_t>(l)];
        }
        t[j] -= 1.0;
    };

    // Rarest label first: place every unassigned example carrying it, in
    // ascending index order, then re-select.
    for (;;) {
        int rarest = -1;
        std::size_t rarest_count = 0;
        for (int l = 0; l < n_labels; ++l) {
            const std::size_t cnt = remaining[static_cast<std::size_t>(l)];
            if (cnt == 0) continue;
            if (rarest < 0 || cnt < rarest_count) {
                rarest = l;
                rarest_count = cnt;
            }
        }
        if (rarest < 0) break;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment[i] >= 0) continue;
            if (std::find(labels[i].begin(), labels[i].end(), rarest) == labels[i].end()) continue;
            assign(i, pick_subset(rarest));
        }
    }

    // Examples with empty label sets go wherever total demand is greatest.
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] < 0) assign(i, pick_subset(-1));
    }

    StratifiedSplit split;
    split.subsets.resize(n_subsets);
    split.target_proportions = proportions;
    for (std::size_t i = 0; i < n; ++i) {
        split.subsets[static_cast<std::size_t>(assignment[i])].push_back(i);
    }
    return split;
}

StratifiedSplit iterative_stratify(const DatasetManifest& manifest,
                                   const std::vector<double>& proportions,
                                   std::uint64_t seed) {
    if (manifest.empty()) throw Error("stratification needs at least one record");
    std::vector<std::vector<int>> labels;
    labels.reserve(manifest.size());
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.has_mask()) {
            throw Error("record " + rec.image + " has no mask; stratification needs labels");
        }
        labels.push_back(label_set(load_mask(rec.mask)));
    }
    return stratify_label_sets(labels, proportions, seed);
}

std::pair<Image, LabelMask> augment(const Image& img, const LabelMask& mask,
                                    const AugmentConfig& cfg, Rng& rng) {
    check_image(img);
    check_mask(mask);
    if (img.width != mask.width || img.height != mask.height) {
        throw Error("augmentation image and mask dimensions differ");
    }
    if (img.width != cfg.crop_w || img.height != cfg.crop_h) {
        throw Error("augmentation input is " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + ", expected " + std::to_string(cfg.crop_w) +
                    "x" + std::to_string(cfg.crop_h));
    }
    if (cfg.resize_w < cfg.crop_w || cfg.resize_h < cfg.crop_h) {
        throw Error("augmentation resize target is smaller than the crop");
    }

    // Fixed draw order, always consumed: crop offsets, flip gates,
    // photometric gate, then the four jitter parameters.
    const std::uint64_t cx = rng.below(static_cast<std::uint64_t>(cfg.resize_w - cfg.crop_w) + 1);
    const std::uint64_t cy = rng.below(static_cast<std::uint64_t>(cfg.resize_h - cfg.crop_h) + 1);
    const double u_hflip = rng.uniform();
    const double u_vflip = rng.uniform();
    const double u_photo = rng.uniform();
    const double brightness = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta);
    const double contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
    const double saturation = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
    const double hue_units = rng.uniform(-cfg.hue_delta, cfg.hue_delta);

    Image out_img = resize_bilinear(img, cfg.resize_w, cfg.resize_h);
    LabelMask out_mask = resize_nearest(mask, cfg.resize_w, cfg.resize_h);
    out_img = crop_image(out_img, static_cast<int>(cx), static_cast<int>(cy), cfg.crop_w, cfg.crop_h);
    out_mask = crop_mask(out_mask, static_cast<int>(cx), static_cast<int>(cy), cfg.crop_w, cfg.crop_h);

    if (u_hflip < cfg.flip_prob) {
        flip_horizontal(out_img);
        flip_horizontal(out_mask);
    }
    if (u_vflip < cfg.flip_prob) {
        flip_vertical(out_img);
        flip_vertical(out_mask);
    }
    if (u_photo < cfg.photometric_prob) {
        out_img = photometric_jitter(out_img, brightness, contrast, saturation, hue_units);
    }
    return {std::move(out_img), std::move(out_mask)};
}

} // namespace flakeseg
