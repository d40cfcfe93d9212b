#include "doctest.h"

#include "flakeseg/image_io.hpp"
#include "flakeseg/segmath.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace flakeseg;

namespace {

Tensor random_tensor(Rng& rng, int h, int w, int c, double lo = -1.0, double hi = 1.0) {
    Tensor t = make_tensor(h, w, c);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Straight-line re-evaluation of the head: plain loops, unstabilized
// softmax, no shared code with the library path.
std::vector<double> naive_psi(const TransformPsi& psi, const std::vector<double>& x) {
    std::vector<double> out(static_cast<std::size_t>(psi.out_dim));
    for (int o = 0; o < psi.out_dim; ++o) {
        double v = psi.bias[o];
        for (int i = 0; i < psi.in_dim; ++i) v += psi.weight[o * psi.in_dim + i] * x[i];
        v = (v - psi.bn_mean[o]) / std::sqrt(psi.bn_var[o] + psi.bn_eps) * psi.bn_gamma[o] +
            psi.bn_beta[o];
        if (psi.relu) v = std::max(0.0, v);
        out[o] = v;
    }
    return out;
}

Tensor naive_head_forward(const Tensor& X, const Tensor& M, const OcrHead& head) {
    const int n = X.h * X.w;
    const int d = X.c;
    const int kk = M.c;

    // Region representations.
    std::vector<std::vector<double>> f(kk, std::vector<double>(d, 0.0));
    for (int k = 0; k < kk; ++k) {
        double denom = 0.0;
        for (int i = 0; i < n; ++i) denom += std::exp(M.data[i * kk + k]);
        for (int i = 0; i < n; ++i) {
            const double mbar = std::exp(M.data[i * kk + k]) / denom;
            for (int ch = 0; ch < d; ++ch) f[k][ch] += mbar * X.data[i * d + ch];
        }
    }

    Tensor z = make_tensor(X.h, X.w, head.psi_final.out_dim);
    for (int i = 0; i < n; ++i) {
        std::vector<double> xi(X.data.begin() + i * d, X.data.begin() + (i + 1) * d);
        const std::vector<double> px = naive_psi(head.psi_pixel, xi);

        // Pixel-region relation.
        std::vector<double> omega(kk);
        double denom = 0.0;
        for (int k = 0; k < kk; ++k) {
            const std::vector<double> fk = naive_psi(head.psi_region, f[k]);
            double dot = 0.0;
            for (int a = 0; a < head.psi_pixel.out_dim; ++a) dot += px[a] * fk[a];
            omega[k] = std::exp(dot);
            denom += omega[k];
        }
        for (int k = 0; k < kk; ++k) omega[k] /= denom;

        // Context aggregate.
        std::vector<double> acc(static_cast<std::size_t>(head.psi_inner.out_dim), 0.0);
        for (int k = 0; k < kk; ++k) {
            const std::vector<double> fk = naive_psi(head.psi_inner, f[k]);
            for (int a = 0; a < head.psi_inner.out_dim; ++a) acc[a] += omega[k] * fk[a];
        }
        const std::vector<double> yi = naive_psi(head.psi_out, acc);

        std::vector<double> cat(xi);
        cat.insert(cat.end(), yi.begin(), yi.end());
        const std::vector<double> zi = naive_psi(head.psi_final, cat);
        for (int ch = 0; ch < head.psi_final.out_dim; ++ch) z.data[i * z.c + ch] = zi[ch];
    }
    return z;
}

} // namespace

TEST_CASE("uniform coarse maps reduce region representations to the spatial mean") {
    Rng rng(1);
    const Tensor X = random_tensor(rng, 3, 4, 5);
    const Tensor M = make_tensor(3, 4, 2, 0.7); // equal logits everywhere
    const Matrix f = object_region_repr(X, M);
    for (int ch = 0; ch < 5; ++ch) {
        double mean = 0.0;
        for (std::size_t i = 0; i < X.pixel_count(); ++i) mean += X.data[i * 5 + ch];
        mean /= static_cast<double>(X.pixel_count());
        CHECK(f.at(0, ch) == doctest::Approx(mean).epsilon(1e-12));
        CHECK(f.at(1, ch) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("a saturated coarse map picks out a single pixel's feature") {
    Rng rng(2);
    const Tensor X = random_tensor(rng, 3, 3, 4);
    Tensor M = make_tensor(3, 3, 1, 0.0);
    M.at(1, 2, 0) = 1e4;
    const Matrix f = object_region_repr(X, M);
    for (int ch = 0; ch < 4; ++ch) {
        CHECK(std::abs(f.at(0, ch) - X.at(1, 2, ch)) < 1e-6);
    }
}

TEST_CASE("the two-pixel region representation matches the hand softmax") {
    Tensor X = make_tensor(1, 2, 1);
    X.at(0, 0, 0) = 1.0;
    X.at(0, 1, 0) = 3.0;
    Tensor M = make_tensor(1, 2, 1);
    M.at(0, 0, 0) = 0.0;
    M.at(0, 1, 0) = std::log(3.0);
    const Matrix f = object_region_repr(X, M);
    CHECK(f.at(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("region representations stay inside the per-channel feature range") {
    Rng rng(3);
    const Tensor X = random_tensor(rng, 4, 4, 3);
    const Tensor M = random_tensor(rng, 4, 4, 7, -2.0, 2.0);
    const Matrix f = object_region_repr(X, M);
    for (int ch = 0; ch < 3; ++ch) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < X.pixel_count(); ++i) {
            lo = std::min(lo, X.data[i * 3 + ch]);
            hi = std::max(hi, X.data[i * 3 + ch]);
        }
        for (int k = 0; k < 7; ++k) {
            CHECK(f.at(k, ch) >= lo - 1e-12);
            CHECK(f.at(k, ch) <= hi + 1e-12);
        }
    }
}

TEST_CASE("identical region vectors give uniform pixel-region relations") {
    Rng rng(4);
    const Tensor X = random_tensor(rng, 3, 3, 4);
    const Matrix F = make_matrix(5, 4, 0.37); // every class identical
    const TransformPsi psi = TransformPsi::identity(4);
    const Tensor omega = pixel_region_relation(X, F, psi, psi);
    for (std::size_t i = 0; i < omega.pixel_count(); ++i) {
        for (int k = 0; k < 5; ++k) {
            CHECK(omega.data[i * 5 + k] == doctest::Approx(0.2).epsilon(1e-12));
        }
    }
}

TEST_CASE("a two-class relation with log-odds dot products pins the softmax") {
    Tensor X = make_tensor(1, 1, 1);
    X.at(0, 0, 0) = 1.0;
    Matrix F = make_matrix(2, 1);
    F.at(0, 0) = 0.0;
    F.at(1, 0) = std::log(3.0);
    const TransformPsi psi = TransformPsi::identity(1);
    const Tensor omega = pixel_region_relation(X, F, psi, psi);
    CHECK(omega.at(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(omega.at(0, 0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("pixel-region relation rows always sum to one") {
    Rng rng(5);
    const Tensor X = random_tensor(rng, 4, 5, 3);
    Matrix F = make_matrix(7, 3);
    for (double& v : F.data) v = rng.uniform(-1.0, 1.0);
    const TransformPsi psi_p = TransformPsi::random(3, 4, rng);
    const TransformPsi psi_f = TransformPsi::random(3, 4, rng);
    const Tensor omega = pixel_region_relation(X, F, psi_p, psi_f);
    for (std::size_t i = 0; i < omega.pixel_count(); ++i) {
        double sum = 0.0;
        for (int k = 0; k < 7; ++k) sum += omega.data[i * 7 + k];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("one-hot relations aggregate to a constant context") {
    Matrix F = make_matrix(3, 2);
    for (int k = 0; k < 3; ++k) {
        F.at(k, 0) = k + 1.0;
        F.at(k, 1) = 2.0 * k;
    }
    Tensor omega = make_tensor(2, 2, 3, 0.0);
    for (std::size_t i = 0; i < omega.pixel_count(); ++i) omega.data[i * 3 + 1] = 1.0;
    const TransformPsi psi = TransformPsi::identity(2);
    const Tensor y = ocr_aggregate(omega, F, psi, psi);
    for (std::size_t i = 0; i < y.pixel_count(); ++i) {
        CHECK(y.data[i * 2 + 0] == doctest::Approx(F.at(1, 0)).epsilon(1e-12));
        CHECK(y.data[i * 2 + 1] == doctest::Approx(F.at(1, 1)).epsilon(1e-12));
    }
}

TEST_CASE("context aggregation is the hand-weighted sum and is linear in the regions") {
    Matrix F = make_matrix(2, 2);
    F.at(0, 0) = 1.0;
    F.at(0, 1) = 2.0;
    F.at(1, 0) = 3.0;
    F.at(1, 1) = 4.0;
    Tensor omega = make_tensor(1, 1, 2);
    omega.at(0, 0, 0) = 0.3;
    omega.at(0, 0, 1) = 0.7;
    const TransformPsi psi = TransformPsi::identity(2);
    const Tensor y = ocr_aggregate(omega, F, psi, psi);
    CHECK(y.at(0, 0, 0) == doctest::Approx(2.4).epsilon(1e-12));
    CHECK(y.at(0, 0, 1) == doctest::Approx(3.4).epsilon(1e-12));

    Matrix F2 = F;
    for (double& v : F2.data) v *= 2.0;
    const Tensor y2 = ocr_aggregate(omega, F2, psi, psi);
    CHECK(y2.at(0, 0, 0) == doctest::Approx(2.0 * y.at(0, 0, 0)).epsilon(1e-12));
    CHECK(y2.at(0, 0, 1) == doctest::Approx(2.0 * y.at(0, 0, 1)).epsilon(1e-12));
}

TEST_CASE("pixels with equal features and context get equal final maps") {
    Rng rng(6);
    Tensor X = make_tensor(1, 2, 3);
    Tensor Y = make_tensor(1, 2, 2);
    for (int ch = 0; ch < 3; ++ch) X.at(0, 0, ch) = X.at(0, 1, ch) = rng.uniform(-1.0, 1.0);
    for (int ch = 0; ch < 2; ++ch) Y.at(0, 0, ch) = Y.at(0, 1, ch) = rng.uniform(-1.0, 1.0);
    const TransformPsi psi_z = TransformPsi::random(5, 4, rng);
    const Tensor Z = augmented_repr(X, Y, psi_z);
    for (int ch = 0; ch < 4; ++ch) CHECK(Z.at(0, 0, ch) == Z.at(0, 1, ch));
}

TEST_CASE("zero context with context-blind weights reduces to a linear map of features") {
    Rng rng(7);
    const Tensor X = random_tensor(rng, 3, 3, 2);
    const Tensor Y = make_tensor(3, 3, 2, 0.0);
    TransformPsi psi_z = TransformPsi::identity(4);
    // Keep only the feature block: rows select x components.
    psi_z.weight.assign(16, 0.0);
    psi_z.weight[0 * 4 + 0] = 2.0;
    psi_z.weight[1 * 4 + 1] = -1.0;
    const Tensor Z = augmented_repr(X, Y, psi_z);
    for (std::size_t i = 0; i < X.pixel_count(); ++i) {
        CHECK(Z.data[i * 4 + 0] == doctest::Approx(2.0 * X.data[i * 2 + 0]).epsilon(1e-12));
        CHECK(Z.data[i * 4 + 1] == doctest::Approx(-X.data[i * 2 + 1]).epsilon(1e-12));
        CHECK(Z.data[i * 4 + 2] == 0.0);
        CHECK(Z.data[i * 4 + 3] == 0.0);
    }
}

TEST_CASE("the full head forward matches an independent straight-line evaluation") {
    Rng rng(2026);
    const Tensor X = random_tensor(rng, 4, 4, 3);
    const Tensor M = random_tensor(rng, 4, 4, 7, -2.0, 2.0);
    OcrHead head;
    head.psi_pixel = TransformPsi::random(3, 5, rng);
    head.psi_region = TransformPsi::random(3, 5, rng);
    head.psi_inner = TransformPsi::random(3, 4, rng);
    head.psi_out = TransformPsi::random(4, 6, rng);
    head.psi_final = TransformPsi::random(9, 7, rng, false);

    const Tensor fast = head.forward(X, M);
    const Tensor slow = naive_head_forward(X, M, head);
    REQUIRE(fast.data.size() == slow.data.size());
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
        CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-9);
    }
}

TEST_CASE("head dimension mismatches are rejected") {
    Rng rng(8);
    const Tensor X = random_tensor(rng, 3, 3, 3);
    const Tensor M = random_tensor(rng, 4, 3, 2);
    CHECK_THROWS_AS(object_region_repr(X, M), Error);
    const Matrix F = make_matrix(2, 3);
    CHECK_THROWS_AS(
        pixel_region_relation(X, F, TransformPsi::identity(2), TransformPsi::identity(3)), Error);
    CHECK_THROWS_AS(
        pixel_region_relation(X, F, TransformPsi::identity(3), TransformPsi::identity(2)), Error);
    const Tensor omega = make_tensor(3, 3, 4, 0.25);
    CHECK_THROWS_AS(ocr_aggregate(omega, F, TransformPsi::identity(3), TransformPsi::identity(3)),
                    Error);
    CHECK_THROWS_AS(augmented_repr(X, make_tensor(3, 3, 2), TransformPsi::identity(4)), Error);
}

TEST_CASE("a perfect one-hot prediction has zero loss") {
    LabelMask truth = make_mask(3, 3, 0);
    truth.at(1, 1) = 4;
    Tensor probs = make_tensor(3, 3, kNumClasses, 0.0);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) probs.at(y, x, truth.at(x, y)) = 1.0;
    }
    std::array<double, kNumClasses> w;
    w.fill(1.0);
    const CeResult res = weighted_ce(probs, truth, w);
    CHECK(res.loss == 0.0);
}

TEST_CASE("a uniform prediction costs log of the class count per pixel") {
    const LabelMask truth = make_mask(4, 4, 3);
    const Tensor probs = make_tensor(4, 4, kNumClasses, 1.0 / kNumClasses);
    std::array<double, kNumClasses> w;
    w.fill(1.0);
    const CeResult res = weighted_ce(probs, truth, w);
    CHECK(res.loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("unit weights reduce the weighted loss to plain cross-entropy") {
    Rng rng(9);
    const LabelMask truth = testutil::random_mask(rng, 5, 4);
    Tensor logits = random_tensor(rng, 4, 5, kNumClasses, -2.0, 2.0);
    const Tensor probs = softmax_channels(logits);
    std::array<double, kNumClasses> w;
    w.fill(1.0);
    const CeResult res = weighted_ce(probs, truth, w);
    double expect = 0.0;
    for (std::size_t i = 0; i < truth.classes.size(); ++i) {
        expect -= std::log(probs.data[i * kNumClasses + truth.classes[i]]);
    }
    expect /= static_cast<double>(truth.classes.size());
    CHECK(res.loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("a zero probability at the true class is clamped, not infinite") {
    LabelMask truth = make_mask(3, 3, 1);
    Tensor probs = make_tensor(3, 3, kNumClasses, 0.0);
    for (std::size_t i = 0; i < probs.pixel_count(); ++i) probs.data[i * kNumClasses + 0] = 1.0;
    std::array<double, kNumClasses> w;
    w.fill(1.0);
    const CeResult res = weighted_ce(probs, truth, w);
    CHECK(std::isfinite(res.loss));
    CHECK(res.loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("the analytic gradient matches central finite differences") {
    Rng rng(10);
    const LabelMask truth = testutil::random_mask(rng, 4, 4);
    Tensor logits = random_tensor(rng, 4, 4, kNumClasses, -1.0, 1.0);
    std::array<double, kNumClasses> w;
    for (double& v : w) v = rng.uniform(0.5, 3.0);

    const CeResult res = weighted_ce(softmax_channels(logits), truth, w);
    const double h = 1e-6;
    for (std::size_t j = 0; j < logits.data.size(); ++j) {
        Tensor plus = logits, minus = logits;
        plus.data[j] += h;
        minus.data[j] -= h;
        const double lp = weighted_ce(softmax_channels(plus), truth, w).loss;
        const double lm = weighted_ce(softmax_channels(minus), truth, w).loss;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = res.grad.data[j];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        CHECK(std::abs(numeric - analytic) / denom < 1e-4);
    }
}

TEST_CASE("sample weights follow the inverse-frequency power law") {
    ClassWeights mu;
    mu.w = {0.25, 0.75, 0.0, 0.0, 0.0, 0.0, 0.0};

    const auto flat = sample_weights(mu, 0.0);
    for (double v : flat) CHECK(v == 1.0);

    const auto inv = sample_weights(mu, 1.0);
    CHECK(inv[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(inv[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    // Absent classes are capped at the rarest present class's weight.
    for (int k = 2; k < kNumClasses; ++k) CHECK(inv[k] == doctest::Approx(4.0).epsilon(1e-12));

    ClassWeights background;
    background.w = {0.9199, 0.0801, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(sample_weights(background, 1.0)[0] == doctest::Approx(1.087).epsilon(1e-3));
}

namespace {

/// Two-tone corpus: left half one color/class 0, right half another/class 1.
DatasetManifest write_separable_corpus(testutil::TempDir& dir, int n_images, int side) {
    DatasetManifest manifest;
    for (int i = 0; i < n_images; ++i) {
        Image img = make_image(side, side, {30, 60, 200});
        LabelMask mask = make_mask(side, side, 0);
        for (int y = 0; y < side; ++y) {
            for (int x = side / 2; x < side; ++x) {
                img.at(x, y, 0) = 220;
                img.at(x, y, 1) = 40;
                img.at(x, y, 2) = 40;
                mask.at(x, y) = 1;
            }
        }
        const std::string img_path = dir.file("img" + std::to_string(i) + ".png");
        const std::string mask_path = dir.file("mask" + std::to_string(i) + ".png");
        save_image(img, img_path);
        save_mask(mask, mask_path);
        ManifestRecord rec;
        rec.image = img_path;
        rec.mask = mask_path;
        rec.split = "train";
        manifest.records.push_back(rec);
    }
    return manifest;
}

} // namespace

TEST_CASE("training separates a linearly separable two-class corpus") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 4, 16);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_iters = 300;
    const TrainResult result = train(manifest, cfg, 7);

    REQUIRE(result.loss_history.size() == 300);
    for (double l : result.loss_history) CHECK(std::isfinite(l));
    CHECK(result.loss_history.back() < result.loss_history.front());

    const Image img = load_image(manifest.records[0].image);
    const LabelMask truth = load_mask(manifest.records[0].mask);
    const LabelMask pred = predict(result.model, img);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.classes.size(); ++i) {
        if (truth.classes[i] == pred.classes[i]) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(truth.classes.size()) >= 0.99);
}

TEST_CASE("zero training iterations leave the initialization untouched") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    TrainConfig cfg;
    cfg.max_iters = 0;
    const TrainResult result = train(manifest, cfg, 1);
    for (double v : result.model.weight) CHECK(v == 0.0);
    for (double v : result.model.bias) CHECK(v == 0.0);
    CHECK(result.loss_history.empty());
}

TEST_CASE("training twice with one seed reproduces the parameters bit for bit") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 3, 8);
    TrainConfig cfg;
    cfg.max_iters = 50;
    cfg.batch_size = 2;
    const TrainResult a = train(manifest, cfg, 11);
    const TrainResult b = train(manifest, cfg, 11);
    CHECK(a.model.weight == b.model.weight);
    CHECK(a.model.bias == b.model.bias);
    CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("training requires a train split") {
    testutil::TempDir dir;
    DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    for (ManifestRecord& rec : manifest.records) rec.split = "test";
    CHECK_THROWS_AS(train(manifest, TrainConfig{}, 0), Error);
}

TEST_CASE("weak learning at rate zero is the identity on parameters") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    TrainConfig cfg;
    cfg.max_iters = 60;
    cfg.batch_size = 2;
    const TrainResult base = train(manifest, cfg, 3);

    TrainConfig weak_cfg = cfg;
    weak_cfg.weak_lr = 0.0;
    weak_cfg.max_iters = 40;
    const WeakResult frozen = weak_learn(base.model, manifest, weak_cfg, 5);
    CHECK(frozen.model.weight == base.model.weight);
    CHECK(frozen.model.bias == base.model.bias);
    CHECK(frozen.param_delta == 0.0);
}

TEST_CASE("weak learning nudges parameters without moving them far") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    TrainConfig cfg;
    cfg.max_iters = 100;
    cfg.batch_size = 2;
    const TrainResult base = train(manifest, cfg, 3);

    const WeakResult tuned = weak_learn(base.model, manifest, cfg, 5);
    CHECK(tuned.param_delta > 0.0);
    double base_norm = 0.0;
    for (double v : base.model.weight) base_norm += v * v;
    for (double v : base.model.bias) base_norm += v * v;
    base_norm = std::sqrt(base_norm);
    CHECK(tuned.param_delta <= 0.01 * base_norm);
    // The input model is untouched by fine-tuning a copy.
    CHECK(base.model.weight == train(manifest, cfg, 3).model.weight);
}

TEST_CASE("an all-zero model predicts the tie-break class everywhere") {
    PixelClassifier model;
    model.input_w = 8;
    model.input_h = 8;
    model.weight.assign(kNumClasses * PixelClassifier::kFeatureDim, 0.0);
    model.bias.assign(kNumClasses, 0.0);
    Rng rng(12);
    const Image img = testutil::random_image(rng, 8, 8);
    const LabelMask pred = predict(model, img);
    for (std::uint8_t v : pred.classes) CHECK(v == 0);

    model.bias[3] = 5.0;
    const LabelMask pred3 = predict(model, img);
    for (std::uint8_t v : pred3.classes) CHECK(v == 3);
}

TEST_CASE("scaling all logits by a positive constant never changes the prediction") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    TrainConfig cfg;
    cfg.max_iters = 80;
    cfg.batch_size = 2;
    const TrainResult base = train(manifest, cfg, 19);

    PixelClassifier scaled = base.model;
    for (double& v : scaled.weight) v *= 3.5;
    for (double& v : scaled.bias) v *= 3.5;

    Rng rng(13);
    const Image img = testutil::random_image(rng, 8, 8);
    CHECK(predict(base.model, img).classes == predict(scaled, img).classes);
}

TEST_CASE("prediction enforces the model's input dimensions") {
    PixelClassifier model;
    model.input_w = 8;
    model.input_h = 8;
    model.weight.assign(kNumClasses * PixelClassifier::kFeatureDim, 0.0);
    model.bias.assign(kNumClasses, 0.0);
    Rng rng(14);
    const Image img = testutil::random_image(rng, 9, 8);
    CHECK_THROWS_AS(predict(model, img), Error);
}

TEST_CASE("a model round-trips through its file form exactly") {
    testutil::TempDir dir;
    const DatasetManifest manifest = write_separable_corpus(dir, 2, 8);
    TrainConfig cfg;
    cfg.max_iters = 30;
    cfg.batch_size = 2;
    const TrainResult base = train(manifest, cfg, 23);

    const std::string path = dir.file("model.json");
    save_model(base.model, path);
    const PixelClassifier loaded = load_model(path);
    CHECK(loaded.input_w == base.model.input_w);
    CHECK(loaded.input_h == base.model.input_h);
    CHECK(loaded.weight == base.model.weight);
    CHECK(loaded.bias == base.model.bias);

    CHECK_THROWS_AS(load_model(dir.file("missing.json")), Error);
}
