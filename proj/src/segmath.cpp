#include "flakeseg/segmath.hpp"

#include "flakeseg/image_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>

namespace flakeseg {

namespace {

constexpr double kLogClamp = 1e-12;

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(std::string(what) + " contains a non-finite value");
    }
}

void check_same_grid(const Tensor& a, const Tensor& b, const char* what) {
    if (a.h != b.h || a.w != b.w) {
        throw Error(std::string(what) + ": grids are " + std::to_string(a.h) + "x" +
                    std::to_string(a.w) + " and " + std::to_string(b.h) + "x" +
                    std::to_string(b.w));
    }
}

} // namespace

Tensor make_tensor(int h, int w, int c, double fill) {
    if (h < 1 || w < 1 || c < 1) {
        throw Error("tensor dims " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                    std::to_string(c) + " must be positive");
    }
    Tensor t;
    t.h = h;
    t.w = w;
    t.c = c;
    t.data.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                      static_cast<std::size_t>(c),
                  fill);
    return t;
}

Matrix make_matrix(int rows, int cols, double fill) {
    if (rows < 1 || cols < 1) {
        throw Error("matrix dims " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " must be positive");
    }
    Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
    return m;
}

TransformPsi TransformPsi::identity(int dim) {
    if (dim < 1) throw Error("transform dimension must be positive");
    TransformPsi psi;
    psi.in_dim = dim;
    psi.out_dim = dim;
    psi.weight.assign(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < dim; ++i) {
        psi.weight[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(i)] = 1.0;
    }
    psi.bias.assign(static_cast<std::size_t>(dim), 0.0);
    psi.bn_mean.assign(static_cast<std::size_t>(dim), 0.0);
    psi.bn_var.assign(static_cast<std::size_t>(dim), 1.0);
    psi.bn_gamma.assign(static_cast<std::size_t>(dim), 1.0);
    psi.bn_beta.assign(static_cast<std::size_t>(dim), 0.0);
    psi.bn_eps = 0.0;
    psi.relu = false;
    return psi;
}

TransformPsi TransformPsi::random(int in_dim, int out_dim, Rng& rng, bool relu) {
    if (in_dim < 1 || out_dim < 1) throw Error("transform dimensions must be positive");
    TransformPsi psi;
    psi.in_dim = in_dim;
    psi.out_dim = out_dim;
    const std::size_t n = static_cast<std::size_t>(in_dim) * static_cast<std::size_t>(out_dim);
    psi.weight.resize(n);
    for (double& v : psi.weight) v = rng.uniform(-0.5, 0.5);
    psi.bias.resize(static_cast<std::size_t>(out_dim));
    for (double& v : psi.bias) v = rng.uniform(-0.2, 0.2);
    psi.bn_mean.resize(static_cast<std::size_t>(out_dim));
    for (double& v : psi.bn_mean) v = rng.uniform(-0.2, 0.2);
    psi.bn_var.resize(static_cast<std::size_t>(out_dim));
    for (double& v : psi.bn_var) v = rng.uniform(0.5, 1.5);
    psi.bn_gamma.resize(static_cast<std::size_t>(out_dim));
    for (double& v : psi.bn_gamma) v = rng.uniform(0.5, 1.5);
    psi.bn_beta.resize(static_cast<std::size_t>(out_dim));
    for (double& v : psi.bn_beta) v = rng.uniform(-0.2, 0.2);
    psi.relu = relu;
    return psi;
}

std::vector<double> TransformPsi::apply(const double* x) const {
    std::vector<double> out(static_cast<std::size_t>(out_dim));
    for (int o = 0; o < out_dim; ++o) {
        double v = bias[static_cast<std::size_t>(o)];
        const double* row = weight.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(in_dim);
        for (int i = 0; i < in_dim; ++i) v += row[i] * x[i];
        v = (v - bn_mean[static_cast<std::size_t>(o)]) /
                std::sqrt(bn_var[static_cast<std::size_t>(o)] + bn_eps) *
                bn_gamma[static_cast<std::size_t>(o)] +
            bn_beta[static_cast<std::size_t>(o)];
        if (relu && v < 0.0) v = 0.0;
        out[static_cast<std::size_t>(o)] = v;
    }
    return out;
}

std::vector<double> TransformPsi::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != in_dim) {
        throw Error("transform input has " + std::to_string(x.size()) + " dims, expected " +
                    std::to_string(in_dim));
    }
    return apply(x.data());
}

Matrix object_region_repr(const Tensor& X, const Tensor& M) {
    check_same_grid(X, M, "region representation");
    check_finite(X.data, "feature map");
    check_finite(M.data, "coarse maps");
    const std::size_t n = X.pixel_count();
    const int k_classes = M.c;
    const int d = X.c;
    Matrix f = make_matrix(k_classes, d, 0.0);
    std::vector<double> weights(n);
    for (int k = 0; k < k_classes; ++k) {
        // Softmax over all pixels of class k's coarse map.
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            max_logit = std::max(max_logit, M.data[i * static_cast<std::size_t>(M.c) +
                                                   static_cast<std::size_t>(k)]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(M.data[i * static_cast<std::size_t>(M.c) +
                                             static_cast<std::size_t>(k)] -
                                      max_logit);
            weights[i] = e;
            total += e;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weights[i] / total;
            const double* x = X.data.data() + i * static_cast<std::size_t>(d);
            for (int ch = 0; ch < d; ++ch) f.at(k, ch) += w * x[ch];
        }
    }
    return f;
}

Tensor pixel_region_relation(const Tensor& X, const Matrix& F, const TransformPsi& psi_pixel,
                             const TransformPsi& psi_region) {
    if (psi_pixel.in_dim != X.c) throw Error("pixel transform input dims do not match features");
    if (psi_region.in_dim != F.cols) throw Error("region transform input dims do not match regions");
    if (psi_pixel.out_dim != psi_region.out_dim) {
        throw Error("pixel and region transforms map into different spaces");
    }
    const int k_classes = F.rows;
    const std::size_t n = X.pixel_count();

    std::vector<std::vector<double>> regions(static_cast<std::size_t>(k_classes));
    for (int k = 0; k < k_classes; ++k) {
        regions[static_cast<std::size_t>(k)] =
            psi_region.apply(F.data.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(F.cols));
    }

    Tensor omega = make_tensor(X.h, X.w, k_classes);
    std::vector<double> dots(static_cast<std::size_t>(k_classes));
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> px = psi_pixel.apply(X.data.data() + i * static_cast<std::size_t>(X.c));
        double max_dot = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_classes; ++k) {
            double dot = 0.0;
            const std::vector<double>& fk = regions[static_cast<std::size_t>(k)];
            for (int a = 0; a < psi_pixel.out_dim; ++a) dot += px[static_cast<std::size_t>(a)] * fk[static_cast<std::size_t>(a)];
            dots[static_cast<std::size_t>(k)] = dot;
            max_dot = std::max(max_dot, dot);
        }
        double total = 0.0;
        for (int k = 0; k < k_classes; ++k) {
            const double e = std::exp(dots[static_cast<std::size_t>(k)] - max_dot);
            dots[static_cast<std::size_t>(k)] = e;
            total += e;
        }
        for (int k = 0; k < k_classes; ++k) {
            omega.data[i * static_cast<std::size_t>(k_classes) + static_cast<std::size_t>(k)] =
                dots[static_cast<std::size_t>(k)] / total;
        }
    }
    return omega;
}

Tensor ocr_aggregate(const Tensor& omega, const Matrix& F, const TransformPsi& psi_inner,
                     const TransformPsi& psi_out) {
    if (omega.c != F.rows) throw Error("relation maps and region count disagree");
    if (psi_inner.in_dim != F.cols) throw Error("inner transform input dims do not match regions");
    if (psi_out.in_dim != psi_inner.out_dim) {
        throw Error("output transform input dims do not match the aggregate");
    }
    const int k_classes = F.rows;
    const int mid = psi_inner.out_dim;

    std::vector<std::vector<double>> regions(static_cast<std::size_t>(k_classes));
    for (int k = 0; k < k_classes; ++k) {
        regions[static_cast<std::size_t>(k)] =
            psi_inner.apply(F.data.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(F.cols));
    }

    Tensor y = make_tensor(omega.h, omega.w, psi_out.out_dim);
    std::vector<double> acc(static_cast<std::size_t>(mid));
    const std::size_t n = omega.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int k = 0; k < k_classes; ++k) {
            const double w = omega.data[i * static_cast<std::size_t>(k_classes) + static_cast<std::size_t>(k)];
            const std::vector<double>& fk = regions[static_cast<std::size_t>(k)];
            for (int a = 0; a < mid; ++a) acc[static_cast<std::size_t>(a)] += w * fk[static_cast<std::size_t>(a)];
        }
        const std::vector<double> out = psi_out.apply(acc.data());
        for (int a = 0; a < psi_out.out_dim; ++a) {
            y.data[i * static_cast<std::size_t>(psi_out.out_dim) + static_cast<std::size_t>(a)] =
                out[static_cast<std::size_t>(a)];
        }
    }
    return y;
}

Tensor augmented_repr(const Tensor& X, const Tensor& Y_ctx, const TransformPsi& psi_final) {
    check_same_grid(X, Y_ctx, "augmented representation");
    if (psi_final.in_dim != X.c + Y_ctx.c) {
        throw Error("final transform expects " + std::to_string(psi_final.in_dim) +
                    " dims, concatenation has " + std::to_string(X.c + Y_ctx.c));
    }
    Tensor z = make_tensor(X.h, X.w, psi_final.out_dim);
    std::vector<double> cat(static_cast<std::size_t>(X.c + Y_ctx.c));
    const std::size_t n = X.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (int ch = 0; ch < X.c; ++ch) {
            cat[static_cast<std::size_t>(ch)] = X.data[i * static_cast<std::size_t>(X.c) + static_cast<std::size_t>(ch)];
        }
        for (int ch = 0; ch < Y_ctx.c; ++ch) {
            cat[static_cast<std::size_t>(X.c + ch)] =
                Y_ctx.data[i * static_cast<std::size_t>(Y_ctx.c) + static_cast<std::size_t>(ch)];
        }
        const std::vector<double> out = psi_final.apply(cat.data());
        for (int ch = 0; ch < psi_final.out_dim; ++ch) {
            z.data[i * static_cast<std::size_t>(psi_final.out_dim) + static_cast<std::size_t>(ch)] =
                out[static_cast<std::size_t>(ch)];
        }
    }
    return z;
}

Tensor OcrHead::forward(const Tensor& X, const Tensor& M) const {
    const Matrix f = object_region_repr(X, M);
    const Tensor omega = pixel_region_relation(X, f, psi_pixel, psi_region);
    const Tensor y = ocr_aggregate(omega, f, psi_inner, psi_out);
    return augmented_repr(X, y, psi_final);
}

CeResult weighted_ce(const Tensor& probs, const LabelMask& truth,
                     const std::array<double, kNumClasses>& weights) {
    if (probs.c != kNumClasses) {
        throw Error("probability tensor has " + std::to_string(probs.c) + " channels, expected " +
                    std::to_string(kNumClasses));
    }
    if (probs.h != truth.height || probs.w != truth.width) {
        throw Error("probability tensor and mask dimensions differ");
    }
    const std::size_t n = probs.pixel_count();
    CeResult result;
    result.grad = make_tensor(probs.h, probs.w, kNumClasses);
    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int t = truth.classes[i];
        const double w = weights[static_cast<std::size_t>(t)];
        const double* p = probs.data.data() + i * kNumClasses;
        loss -= w * std::log(std::max(p[t], kLogClamp));
        double* g = result.grad.data.data() + i * kNumClasses;
        for (int k = 0; k < kNumClasses; ++k) {
            g[k] = w * (p[k] - (k == t ? 1.0 : 0.0)) * inv_n;
        }
    }
    result.loss = loss * inv_n;
    return result;
}

std::array<double, kNumClasses> sample_weights(const ClassWeights& mu, double beta) {
    double mu_min_present = 0.0;
    for (double m : mu.w) {
        if (m > 0.0 && (mu_min_present == 0.0 || m < mu_min_present)) mu_min_present = m;
    }
    if (mu_min_present == 0.0) throw Error("sample weights need at least one present class");
    std::array<double, kNumClasses> w{};
    for (int k = 0; k < kNumClasses; ++k) {
        const double m = mu.w[static_cast<std::size_t>(k)] > 0.0
                             ? mu.w[static_cast<std::size_t>(k)]
                             : mu_min_present;
        w[static_cast<std::size_t>(k)] = std::pow(1.0 / m, beta);
    }
    return w;
}

Tensor softmax_channels(const Tensor& logits) {
    Tensor probs = make_tensor(logits.h, logits.w, logits.c);
    const std::size_t n = logits.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double* in = logits.data.data() + i * static_cast<std::size_t>(logits.c);
        double* out = probs.data.data() + i * static_cast<std::size_t>(logits.c);
        double max_logit = in[0];
        for (int k = 1; k < logits.c; ++k) max_logit = std::max(max_logit, in[k]);
        double total = 0.0;
        for (int k = 0; k < logits.c; ++k) {
            out[k] = std::exp(in[k] - max_logit);
            total += out[k];
        }
        for (int k = 0; k < logits.c; ++k) out[k] /= total;
    }
    return probs;
}

Tensor extract_features(const Image& img) {
    check_image(img);
    const YCbCrImage ycc = rgb_to_ycbcr(img);
    const int w = img.width, h = img.height;
    Tensor feats = make_tensor(h, w, PixelClassifier::kFeatureDim);
    const std::array<const std::vector<std::uint8_t>*, 3> planes{&ycc.y, &ycc.cb, &ycc.cr};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double* f = feats.data.data() +
                        (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                         static_cast<std::size_t>(x)) *
                            PixelClassifier::kFeatureDim;
            for (int ch = 0; ch < 3; ++ch) f[ch] = img.at(x, y, ch) / 255.0;
            f[3] = ycc.y[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] / 255.0;
            f[4] = ycc.cb[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] / 255.0;
            f[5] = ycc.cr[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] / 255.0;
            // 3x3 local mean and population standard deviation of each
            // YCbCr plane, window clamped at the borders.
            for (int p = 0; p < 3; ++p) {
                double sum = 0.0, sum_sq = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        const double v = (*planes[static_cast<std::size_t>(p)])
                            [static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) +
                             static_cast<std::size_t>(xx)];
                        sum += v;
                        sum_sq += v * v;
                    }
                }
                const double mean = sum / 9.0;
                const double var = std::max(0.0, sum_sq / 9.0 - mean * mean);
                f[6 + 2 * p] = mean / 255.0;
                f[7 + 2 * p] = std::sqrt(var) / 255.0;
            }
        }
    }
    return feats;
}

namespace {

struct TrainSet {
    std::vector<Tensor> feats;
    std::vector<LabelMask> masks;
    int width = 0;
    int height = 0;
};

TrainSet load_train_split(const DatasetManifest& manifest, int jobs, const char* who) {
    std::vector<const ManifestRecord*> records;
    for (const ManifestRecord& rec : manifest.records) {
        if (rec.split == "train") records.push_back(&rec);
    }
    if (records.empty()) throw Error(std::string(who) + " found no train-split records");

    TrainSet set;
    set.feats.resize(records.size());
    set.masks.resize(records.size());
    std::vector<Image> images(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
        const ManifestRecord& rec = *records[i];
        if (!rec.has_mask()) throw Error("record " + rec.image + " has no mask");
        images[i] = load_image(rec.image);
        set.masks[i] = load_mask(rec.mask);
        if (images[i].width != set.masks[i].width || images[i].height != set.masks[i].height) {
            throw Error("record " + rec.image + ": image and mask dimensions differ");
        }
        set.feats[i] = extract_features(images[i]);
    });
    set.width = images[0].width;
    set.height = images[0].height;
    for (std::size_t i = 1; i < images.size(); ++i) {
        if (images[i].width != set.width || images[i].height != set.height) {
            throw Error("training images disagree on dimensions; standardize them first");
        }
    }
    return set;
}

std::array<double, kNumClasses> pooled_sample_weights(const TrainSet& set, double beta) {
    std::array<std::size_t, kNumClasses> counts{};
    std::size_t total = 0;
    for (const LabelMask& mask : set.masks) {
        for (std::uint8_t v : mask.classes) ++counts[v];
        total += mask.classes.size();
    }
    ClassWeights mu;
    for (int k = 0; k < kNumClasses; ++k) {
        mu.w[static_cast<std::size_t>(k)] =
            static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(total);
    }
    return sample_weights(mu, beta);
}

void check_train_config(const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw Error("learning rate must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw Error("momentum must be in [0,1)");
    if (cfg.weight_decay < 0.0) throw Error("weight decay must be non-negative");
    if (cfg.batch_size < 1) throw Error("batch size must be positive");
    if (cfg.max_iters < 0) throw Error("iteration count must be non-negative");
    if (cfg.weak_lr < 0.0) throw Error("weak learning rate must be non-negative");
}

/// Momentum SGD on the linear classifier; returns the loss per iteration.
std::vector<double> run_sgd(PixelClassifier& model, const TrainSet& set,
                            const std::array<double, kNumClasses>& weights,
                            const TrainConfig& cfg, double lr, std::uint64_t seed) {
    constexpr int kD = PixelClassifier::kFeatureDim;
    constexpr int kK = kNumClasses;
    const std::size_t n_params = static_cast<std::size_t>(kK) * kD;
    std::vector<double> vel_w(n_params, 0.0), vel_b(kK, 0.0);
    std::vector<double> grad_w(n_params), grad_b(kK);
    std::vector<double> logits(kK);
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(cfg.max_iters));
    Rng rng(mix_seed(seed, {0x5347u})); // batch sampling stream
    const std::size_t n_images = set.feats.size();
    const std::size_t px_per_image =
        static_cast<std::size_t>(set.width) * static_cast<std::size_t>(set.height);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const std::size_t idx = rng.below(n_images);
            const Tensor& feats = set.feats[idx];
            const LabelMask& mask = set.masks[idx];
            for (std::size_t i = 0; i < px_per_image; ++i) {
                const double* f = feats.data.data() + i * kD;
                double max_logit = -std::numeric_limits<double>::infinity();
                for (int k = 0; k < kK; ++k) {
                    double v = model.bias[static_cast<std::size_t>(k)];
                    const double* row = model.weight.data() + static_cast<std::size_t>(k) * kD;
                    for (int d = 0; d < kD; ++d) v += row[d] * f[d];
                    logits[static_cast<std::size_t>(k)] = v;
                    max_logit = std::max(max_logit, v);
                }
                double total = 0.0;
                for (int k = 0; k < kK; ++k) {
                    logits[static_cast<std::size_t>(k)] =
                        std::exp(logits[static_cast<std::size_t>(k)] - max_logit);
                    total += logits[static_cast<std::size_t>(k)];
                }
                const int t = mask.classes[i];
                const double w_t = weights[static_cast<std::size_t>(t)];
                loss -= w_t * std::log(std::max(logits[static_cast<std::size_t>(t)] / total, kLogClamp));
                for (int k = 0; k < kK; ++k) {
                    const double p = logits[static_cast<std::size_t>(k)] / total;
                    const double coef = w_t * (p - (k == t ? 1.0 : 0.0));
                    grad_b[static_cast<std::size_t>(k)] += coef;
                    double* gw = grad_w.data() + static_cast<std::size_t>(k) * kD;
                    for (int d = 0; d < kD; ++d) gw[d] += coef * f[d];
                }
            }
        }
        const double scale = 1.0 / (static_cast<double>(cfg.batch_size) * static_cast<double>(px_per_image));
        history.push_back(loss * scale);
        for (std::size_t j = 0; j < n_params; ++j) {
            vel_w[j] = cfg.momentum * vel_w[j] -
                       lr * (grad_w[j] * scale + cfg.weight_decay * model.weight[j]);
            model.weight[j] += vel_w[j];
        }
        for (int k = 0; k < kK; ++k) {
            vel_b[static_cast<std::size_t>(k)] = cfg.momentum * vel_b[static_cast<std::size_t>(k)] -
                                                 lr * grad_b[static_cast<std::size_t>(k)] * scale;
            model.bias[static_cast<std::size_t>(k)] += vel_b[static_cast<std::size_t>(k)];
        }
    }
    return history;
}

} // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg, std::uint64_t seed) {
    check_train_config(cfg);
    const TrainSet set = load_train_split(manifest, cfg.jobs, "training");
    TrainResult result;
    result.model.input_w = set.width;
    result.model.input_h = set.height;
    result.model.weight.assign(static_cast<std::size_t>(kNumClasses) * PixelClassifier::kFeatureDim, 0.0);
    result.model.bias.assign(kNumClasses, 0.0);
    result.class_weights_used = pooled_sample_weights(set, cfg.beta);
    result.loss_history = run_sgd(result.model, set, result.class_weights_used, cfg,
                                  cfg.learning_rate, seed);
    return result;
}

WeakResult weak_learn(const PixelClassifier& model, const DatasetManifest& group,
                      const TrainConfig& cfg, std::uint64_t seed) {
    check_train_config(cfg);
    if (model.weight.empty()) throw Error("weak learning needs a trained model");
    const TrainSet set = load_train_split(group, cfg.jobs, "weak learning");
    if (set.width != model.input_w || set.height != model.input_h) {
        throw Error("group images are " + std::to_string(set.width) + "x" +
                    std::to_string(set.height) + ", model expects " +
                    std::to_string(model.input_w) + "x" + std::to_string(model.input_h));
    }
    WeakResult result;
    result.model = model;
    const std::array<double, kNumClasses> weights = pooled_sample_weights(set, cfg.beta);
    result.loss_history = run_sgd(result.model, set, weights, cfg, cfg.weak_lr, seed);
    double delta_sq = 0.0;
    for (std::size_t j = 0; j < model.weight.size(); ++j) {
        const double d = result.model.weight[j] - model.weight[j];
        delta_sq += d * d;
    }
    for (std::size_t j = 0; j < model.bias.size(); ++j) {
        const double d = result.model.bias[j] - model.bias[j];
        delta_sq += d * d;
    }
    result.param_delta = std::sqrt(delta_sq);
    return result;
}

Tensor model_logits(const PixelClassifier& model, const Image& img) {
    if (img.width != model.input_w || img.height != model.input_h) {
        throw Error("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                    ", model expects " + std::to_string(model.input_w) + "x" +
                    std::to_string(model.input_h));
    }
    const Tensor feats = extract_features(img);
    Tensor logits = make_tensor(img.height, img.width, kNumClasses);
    const std::size_t n = feats.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double* f = feats.data.data() + i * PixelClassifier::kFeatureDim;
        double* out = logits.data.data() + i * kNumClasses;
        for (int k = 0; k < kNumClasses; ++k) {
            double v = model.bias[static_cast<std::size_t>(k)];
            const double* row =
                model.weight.data() + static_cast<std::size_t>(k) * PixelClassifier::kFeatureDim;
            for (int d = 0; d < PixelClassifier::kFeatureDim; ++d) v += row[d] * f[d];
            out[k] = v;
        }
    }
    return logits;
}

LabelMask predict(const PixelClassifier& model, const Image& img) {
    const Tensor logits = model_logits(model, img);
    LabelMask mask = make_mask(img.width, img.height);
    const std::size_t n = logits.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const double* l = logits.data.data() + i * kNumClasses;
        int best = 0;
        for (int k = 1; k < kNumClasses; ++k) {
            if (l[k] > l[best]) best = k;
        }
        mask.classes[i] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

void save_model(const PixelClassifier& model, const std::string& path) {
    nlohmann::json j;
    j["feature_spec"] = "rgb-ycbcr-localstats-12";
    j["input_w"] = model.input_w;
    j["input_h"] = model.input_h;
    j["weight"] = model.weight;
    j["bias"] = model.bias;
    atomic_write_text(path, j.dump(2) + "\n");
}

PixelClassifier load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open model file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    if (j.value("feature_spec", "") != "rgb-ycbcr-localstats-12") {
        throw Error(path + ": unknown feature spec");
    }
    PixelClassifier model;
    model.input_w = j.at("input_w").get<int>();
    model.input_h = j.at("input_h").get<int>();
    model.weight = j.at("weight").get<std::vector<double>>();
    model.bias = j.at("bias").get<std::vector<double>>();
    if (model.weight.size() != static_cast<std::size_t>(kNumClasses) * PixelClassifier::kFeatureDim ||
        model.bias.size() != static_cast<std::size_t>(kNumClasses)) {
        throw Error(path + ": model parameter sizes are wrong");
    }
    return model;
}

} // namespace flakeseg
