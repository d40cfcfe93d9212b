// Segmentation math: the object-contextual-representation head (region
// representations, pixel-region relations, context aggregation and the
// augmented representation), weighted cross-entropy with class-frequency
// sample weights, and a small per-pixel linear classifier with hand-crafted
// color/texture features standing in for a convolutional backbone.
#pragma once

#include "flakeseg/common.hpp"
#include "flakeseg/datasetops.hpp"
#include "flakeseg/image.hpp"
#include "flakeseg/manifest.hpp"

#include <array>
#include <string>
#include <vector>

namespace flakeseg {

/// Row-major H x W x C tensor of doubles (channel fastest).
struct Tensor {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<double> data;

    double& at(int y, int x, int ch) {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(c) +
                    static_cast<std::size_t>(ch)];
    }
    double at(int y, int x, int ch) const {
        return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                     static_cast<std::size_t>(x)) *
                        static_cast<std::size_t>(c) +
                    static_cast<std::size_t>(ch)];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
};

Tensor make_tensor(int h, int w, int c, double fill = 0.0);

/// Dense rows x cols matrix (row-major), used for class region vectors.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    double& at(int r, int ccol) {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(ccol)];
    }
    double at(int r, int ccol) const {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(ccol)];
    }
};

Matrix make_matrix(int rows, int cols, double fill = 0.0);

/// 1x1 linear map followed by inference-mode batch normalization and an
/// optional rectification. Deterministic: normalization always uses the
/// stored statistics.
struct TransformPsi {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weight; // out_dim x in_dim, row-major
    std::vector<double> bias;   // out_dim
    std::vector<double> bn_mean;
    std::vector<double> bn_var;
    std::vector<double> bn_gamma;
    std::vector<double> bn_beta;
    double bn_eps = 1e-5;
    bool relu = true;

    /// Exact identity map (unit weights, neutral normalization, no ReLU).
    static TransformPsi identity(int dim);
    /// Randomly parameterized transform for head-math exercises.
    static TransformPsi random(int in_dim, int out_dim, Rng& rng, bool relu = true);

    std::vector<double> apply(const double* x) const;
    std::vector<double> apply(const std::vector<double>& x) const;
};

/// Region representations per class: softmax over pixels of each coarse
/// map, then the weighted sum of pixel features. Rows of the result are
/// convex combinations of the rows of X.
Matrix object_region_repr(const Tensor& X, const Tensor& M);

/// Pixel-region relation: softmax over classes of the transformed-feature
/// dot products. Every pixel's K weights sum to 1.
Tensor pixel_region_relation(const Tensor& X, const Matrix& F, const TransformPsi& psi_pixel,
                             const TransformPsi& psi_region);

/// Contextual representation: for each pixel, the relation-weighted sum of
/// transformed region vectors, passed through the output transform.
Tensor ocr_aggregate(const Tensor& omega, const Matrix& F, const TransformPsi& psi_inner,
                     const TransformPsi& psi_out);

/// Final maps: each pixel's feature concatenated with its context, through
/// the last transform.
Tensor augmented_repr(const Tensor& X, const Tensor& Y_ctx, const TransformPsi& psi_final);

/// The full head, bundled so a forward pass can be checked end to end.
struct OcrHead {
    TransformPsi psi_pixel;  // feature -> relation space
    TransformPsi psi_region; // region vector -> relation space
    TransformPsi psi_inner;  // region vector -> context space
    TransformPsi psi_out;    // context -> context output
    TransformPsi psi_final;  // concat(feature, context) -> class scores

    Tensor forward(const Tensor& X, const Tensor& M) const;
};

/// Weighted cross-entropy over per-pixel probability rows. The loss is the
/// non-negative mean over pixels of w_t * (-log p_t); the gradient is taken
/// with respect to the logits that produced the probabilities.
struct CeResult {
    double loss = 0.0;
    Tensor grad; // d(loss)/d(logits), same shape as the probabilities
};

CeResult weighted_ce(const Tensor& probs, const LabelMask& truth,
                     const std::array<double, kNumClasses>& weights);

/// Class sample weights w_k = (1/mu_k)^beta; absent classes are capped at
/// the weight of the rarest present class.
std::array<double, kNumClasses> sample_weights(const ClassWeights& mu, double beta);

/// Per-pixel softmax over the channel dimension (numerically stabilized).
Tensor softmax_channels(const Tensor& logits);

/// Linear per-pixel classifier over fixed hand-crafted features:
/// RGB, YCbCr, and the 3x3 local mean and standard deviation of each
/// YCbCr channel, all scaled to [0, 1] — 12 dimensions in total.
struct PixelClassifier {
    static constexpr int kFeatureDim = 12;
    int input_w = 0; // dims the model was trained at; predict enforces them
    int input_h = 0;
    std::vector<double> weight; // kNumClasses x kFeatureDim, row-major
    std::vector<double> bias;   // kNumClasses
};

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4; // applied to weights, not biases
    int batch_size = 8;
    int max_iters = 10000;
    double beta = 1.0;     // sample-weight adjustment factor
    double weak_lr = 1e-4; // near-zero fine-tuning rate
    int jobs = 1;          // parallelism for feature extraction
};

struct TrainResult {
    PixelClassifier model;
    std::vector<double> loss_history;                    // one entry per iteration
    std::array<double, kNumClasses> class_weights_used{}; // sample weights in the loss
};

struct WeakResult {
    PixelClassifier model;
    std::vector<double> loss_history;
    double param_delta = 0.0; // Euclidean distance from the base parameters
};

Tensor extract_features(const Image& img);

/// Stochastic gradient descent with momentum on the train-split records of
/// the manifest; the loss is weighted cross-entropy with weights from the
/// pooled train-split class frequencies.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg, std::uint64_t seed);

/// Fine-tunes a copy of the model on one group's train records at the
/// near-zero rate cfg.weak_lr; the input model is untouched.
WeakResult weak_learn(const PixelClassifier& model, const DatasetManifest& group,
                      const TrainConfig& cfg, std::uint64_t seed);

/// Per-pixel class logits for an image matching the model's input dims.
Tensor model_logits(const PixelClassifier& model, const Image& img);

/// Argmax prediction; ties break toward the lower class index.
LabelMask predict(const PixelClassifier& model, const Image& img);

void save_model(const PixelClassifier& model, const std::string& path);
PixelClassifier load_model(const std::string& path);

} // namespace flakeseg
