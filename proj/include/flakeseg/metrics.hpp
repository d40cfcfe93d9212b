// Confusion-matrix accounting and the six aggregate evaluation metrics
// (pixel accuracy, mean one-vs-rest accuracy, mean IoU, precision, recall,
// F1), averaged over the classes present in prediction or truth.
#pragma once

#include "flakeseg/image.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace flakeseg {

/// One-vs-rest pixel counts per class.
struct ConfusionCounts {
    std::array<std::uint64_t, kNumClasses> tp{};
    std::array<std::uint64_t, kNumClasses> fp{};
    std::array<std::uint64_t, kNumClasses> tn{};
    std::array<std::uint64_t, kNumClasses> fn{};
    std::uint64_t total_pixels = 0;

    /// Associative merge for dataset-level aggregation.
    ConfusionCounts& operator+=(const ConfusionCounts& other);
};

ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth);

/// Classes appearing in either mask of the counts. Derived during
/// confusion(); for merged counts, the union is implied by tp+fn (truth)
/// and tp+fp (prediction) being nonzero.
std::vector<int> present_classes(const ConfusionCounts& counts);

struct MetricReport {
    double pixel_accuracy = 0.0;
    double mean_accuracy = 0.0; // mean per-class one-vs-rest accuracy
    double miou = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0; // harmonic mean of precision and recall
    // The source text's printed variants, kept for traceability: its
    // pixel-accuracy sum counts every pixel once per class, and its F1
    // omits the recall factor from the numerator.
    double pixel_accuracy_printed = 0.0;
    double f1_printed = 0.0;
    std::array<double, kNumClasses> class_iou{};      // -1 where undefined/absent
    std::array<double, kNumClasses> class_accuracy{}; // -1 where absent
    std::vector<int> classes; // the classes the means ran over
    bool undefined = false;   // nothing present: all metrics meaningless
};

/// Metrics over the given classes; per-class terms with an empty
/// denominator are skipped from their mean.
MetricReport evaluate(const ConfusionCounts& counts, const std::vector<int>& classes);

/// Convenience: evaluate over the classes present in the counts.
MetricReport evaluate(const ConfusionCounts& counts);

} // namespace flakeseg
