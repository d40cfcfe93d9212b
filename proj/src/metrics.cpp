#include "flakeseg/metrics.hpp"

#include "flakeseg/common.hpp"

#include <string>

namespace flakeseg {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    for (int k = 0; k < kNumClasses; ++k) {
        tp[static_cast<std::size_t>(k)] += other.tp[static_cast<std::size_t>(k)];
        fp[static_cast<std::size_t>(k)] += other.fp[static_cast<std::size_t>(k)];
        tn[static_cast<std::size_t>(k)] += other.tn[static_cast<std::size_t>(k)];
        fn[static_cast<std::size_t>(k)] += other.fn[static_cast<std::size_t>(k)];
    }
    total_pixels += other.total_pixels;
    return *this;
}

ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth) {
    check_mask(pred);
    check_mask(truth);
    if (pred.width != truth.width || pred.height != truth.height) {
        throw Error("prediction is " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height) + ", truth is " + std::to_string(truth.width) +
                    "x" + std::to_string(truth.height));
    }
    // Joint histogram first; the one-vs-rest counts fall out of its margins.
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> joint{};
    for (std::size_t i = 0; i < pred.classes.size(); ++i) {
        ++joint[pred.classes[i]][truth.classes[i]];
    }
    ConfusionCounts counts;
    counts.total_pixels = pred.classes.size();
    for (int k = 0; k < kNumClasses; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        counts.tp[ks] = joint[ks][ks];
        std::uint64_t pred_k = 0, truth_k = 0;
        for (int j = 0; j < kNumClasses; ++j) {
            pred_k += joint[ks][static_cast<std::size_t>(j)];
            truth_k += joint[static_cast<std::size_t>(j)][ks];
        }
        counts.fp[ks] = pred_k - counts.tp[ks];
        counts.fn[ks] = truth_k - counts.tp[ks];
        counts.tn[ks] = counts.total_pixels - counts.tp[ks] - counts.fp[ks] - counts.fn[ks];
    }
    return counts;
}

std::vector<int> present_classes(const ConfusionCounts& counts) {
    std::vector<int> classes;
    for (int k = 0; k < kNumClasses; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        if (counts.tp[ks] + counts.fn[ks] > 0 || counts.tp[ks] + counts.fp[ks] > 0) {
            classes.push_back(k);
        }
    }
    return classes;
}

MetricReport evaluate(const ConfusionCounts& counts, const std::vector<int>& classes) {
    MetricReport report;
    report.classes = classes;
    report.class_iou.fill(-1.0);
    report.class_accuracy.fill(-1.0);
    if (classes.empty() || counts.total_pixels == 0) {
        report.undefined = true;
        return report;
    }
    const double total = static_cast<double>(counts.total_pixels);

    std::uint64_t correct = 0;
    for (int k = 0; k < kNumClasses; ++k) correct += counts.tp[static_cast<std::size_t>(k)];
    report.pixel_accuracy = static_cast<double>(correct) / total;

    double acc_sum = 0.0, iou_sum = 0.0, prec_sum = 0.0, rec_sum = 0.0;
    double printed_num = 0.0, printed_den = 0.0;
    std::size_t iou_n = 0, prec_n = 0, rec_n = 0;
    for (int k : classes) {
        const std::size_t ks = static_cast<std::size_t>(k);
        const double tp = static_cast<double>(counts.tp[ks]);
        const double fp = static_cast<double>(counts.fp[ks]);
        const double tn = static_cast<double>(counts.tn[ks]);
        const double fn = static_cast<double>(counts.fn[ks]);

        const double acc = (tp + tn) / total;
        report.class_accuracy[ks] = acc;
        acc_sum += acc;
        printed_num += tp + tn;
        printed_den += tp + fp + tn + fn;

        if (tp + fp + fn > 0.0) {
            report.class_iou[ks] = tp / (tp + fp + fn);
            iou_sum += report.class_iou[ks];
            ++iou_n;
        }
        if (tp + fp > 0.0) {
            prec_sum += tp / (tp + fp);
            ++prec_n;
        }
        if (tp + fn > 0.0) {
            rec_sum += tp / (tp + fn);
            ++rec_n;
        }
    }
    const double n_classes = static_cast<double>(classes.size());
    report.mean_accuracy = acc_sum / n_classes;
    report.pixel_accuracy_printed = printed_den > 0.0 ? printed_num / printed_den : 0.0;
    report.miou = iou_n > 0 ? iou_sum / static_cast<double>(iou_n) : 0.0;
    report.precision = prec_n > 0 ? prec_sum / static_cast<double>(prec_n) : 0.0;
    report.recall = rec_n > 0 ? rec_sum / static_cast<double>(rec_n) : 0.0;
    const double pr = report.precision + report.recall;
    report.f1 = pr > 0.0 ? 2.0 * report.precision * report.recall / pr : 0.0;
    report.f1_printed = pr > 0.0 ? 2.0 * report.precision / pr : 0.0;
    return report;
}

MetricReport evaluate(const ConfusionCounts& counts) {
    return evaluate(counts, present_classes(counts));
}

} // namespace flakeseg
