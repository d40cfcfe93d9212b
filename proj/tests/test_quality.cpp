#include "flakeseg/quality.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

using namespace flakeseg;

namespace {

// Constant image plus i.i.d. Gaussian noise of the given sigma in every
// channel, quantized with the library rounding rule.
Image noisy_image(int side, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image img = make_image(side, side, {128, 128, 128});
    for (auto& p : img.pixels) p = clamp_u8(128.0 + sigma * rng.normal());
    return img;
}

} // namespace

TEST_CASE("gradient information transfer has the pinned fixed points") {
    const QualityConfig cfg;
    CHECK(gradient_information(1.0, cfg) == 1.0);
    CHECK(gradient_information(cfg.gamma_act, cfg) == 0.0);
    CHECK(gradient_information(cfg.gamma_act / 2.0, cfg) == 0.0);
    CHECK(gradient_information(0.0, cfg) == 0.0);
    // Strictly increasing above the threshold.
    double prev = 0.0;
    for (double g = 0.07; g <= 1.0; g += 0.01) {
        const double v = gradient_information(g, cfg);
        REQUIRE(v > prev);
        prev = v;
    }
}

TEST_CASE("normalized gradient is zero on constants and peaks below one") {
    const std::vector<std::uint8_t> flat(25, 77);
    for (double g : normalized_gradient(flat, 5, 5)) REQUIRE(g == 0.0);

    // A hard vertical edge: left half 0, right half 255.
    std::vector<std::uint8_t> edge(8 * 8, 0);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) edge[y * 8 + x] = 255;
    const auto g = normalized_gradient(edge, 8, 8);
    for (double v : g) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
    // The column next to the edge sees the maximal horizontal response
    // 4*255 and no vertical response: g = (4*255)/(4*255*sqrt(2)).
    CHECK(g[3 * 8 + 3] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("gradient metric is zero and flagged on constant images") {
    bool degenerate = false;
    CHECK(gradient_metric(make_image(20, 20, {90, 90, 90}), {}, &degenerate) == 0.0);
    CHECK(degenerate);
}

TEST_CASE("a single active grid cell pins E/S to 1/sqrt(3)") {
    // 2x2 pooling grid over a 20x20 image; all edge activity confined to
    // the top-left quadrant. Pooled sums are {s,0,0,0}, so
    // E/S = (s/4)/(s*sqrt(3)/4) = 1/sqrt(3) for any s > 0.
    Image img = make_image(20, 20, {50, 50, 50});
    for (int y = 3; y <= 5; ++y)
        for (int x = 3; x <= 5; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = 200;
    QualityConfig cfg;
    cfg.grid_rows = 2;
    cfg.grid_cols = 2;
    bool degenerate = true;
    const double m = gradient_metric(img, cfg, &degenerate);
    CHECK_FALSE(degenerate);
    CHECK(m == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("entropy metric matches hand-computed histograms") {
    QualityConfig cfg; // k_e = 1/8
    CHECK(entropy_metric(make_image(16, 16, {40, 40, 40}), cfg) == 0.0);

    // Every luma level 0..255 exactly once: 8 bits * 1/8 = 1.
    Image card = make_image(16, 16);
    for (int i = 0; i < 256; ++i)
        for (int c = 0; c < 3; ++c) card.pixels[i * 3 + c] = static_cast<std::uint8_t>(i);
    CHECK(entropy_metric(card, cfg) == doctest::Approx(1.0).epsilon(1e-12));

    // Two equally occupied levels: 1 bit * 1/8.
    Image two = make_image(16, 16, {10, 10, 10});
    for (int i = 128; i < 256; ++i)
        for (int c = 0; c < 3; ++c) two.pixels[i * 3 + c] = 200;
    CHECK(entropy_metric(two, cfg) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("entropy depends only on the histogram, not pixel positions") {
    Rng rng(1234);
    Image img = testutil::random_image(rng, 12, 12);
    Image shuffled = img;
    for (std::size_t i = shuffled.pixel_count(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        for (int c = 0; c < 3; ++c)
            std::swap(shuffled.pixels[(i - 1) * 3 + c], shuffled.pixels[j * 3 + c]);
    }
    CHECK(entropy_metric(img, {}) == entropy_metric(shuffled, {}));
}

TEST_CASE("noise metric is zero on a constant image") {
    bool empty = true;
    CHECK(noise_metric(make_image(16, 16, {128, 128, 128}), {}, &empty) == 0.0);
    CHECK_FALSE(empty);
}

TEST_CASE("noise metric recovers a known Gaussian sigma per channel") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Image img = noisy_image(64, 10.0, seed);
        std::array<double, 3> sigma{};
        noise_metric(img, {}, nullptr, &sigma);
        for (int c = 0; c < 3; ++c) {
            REQUIRE(sigma[c] > 9.0);
            REQUIRE(sigma[c] < 11.0);
        }
    }
}

TEST_CASE("an all-white image empties the exposure mask and draws the penalty") {
    bool empty = false;
    const double m = noise_metric(make_image(10, 10, {255, 255, 255}), {}, &empty);
    CHECK(empty);
    CHECK(m == 255.0 * 3);
}

TEST_CASE("noise metric grows linearly with the injected sigma") {
    const std::vector<double> sigmas = {2.0, 5.0, 10.0, 20.0};
    std::vector<double> means;
    for (double s : sigmas) {
        double acc = 0.0;
        for (std::uint64_t seed = 100; seed < 103; ++seed)
            acc += noise_metric(noisy_image(48, s, seed + static_cast<std::uint64_t>(s * 1000)), {});
        means.push_back(acc / 3.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i) REQUIRE(means[i] > means[i - 1]);

    // Least-squares fit of mean M_noise against sigma.
    const int n = static_cast<int>(sigmas.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += sigmas[i];
        sy += means[i];
        sxx += sigmas[i] * sigmas[i];
        sxy += sigmas[i] * means[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (int i = 0; i < n; ++i) {
        const double fit = intercept + slope * sigmas[i];
        ss_res += (means[i] - fit) * (means[i] - fit);
        ss_tot += (means[i] - sy / n) * (means[i] - sy / n);
    }
    CHECK(slope > 0.0);
    CHECK(1.0 - ss_res / ss_tot > 0.99);
}

TEST_CASE("quality score composes the sub-metrics linearly") {
    Rng rng(31415);
    Image img = testutil::random_image(rng, 32, 32);

    const QualityConfig cfg;
    const QualityReport report = quality_score(img, cfg);
    const double mg = gradient_metric(img, cfg);
    const double me = entropy_metric(img, cfg);
    const double mn = noise_metric(img, cfg);
    CHECK(report.score ==
          doctest::Approx(cfg.a * mg + cfg.b * me - cfg.c * mn).epsilon(1e-9));

    QualityConfig projection = cfg;
    projection.a = 1.0;
    projection.b = 0.0;
    projection.c = 0.0;
    CHECK(quality_score(img, projection).score == mg);

    // Bumping one coefficient moves the score by exactly that coefficient
    // times the sub-metric.
    QualityConfig bumped = cfg;
    bumped.a = cfg.a + 0.4;
    CHECK(quality_score(img, bumped).score - report.score == doctest::Approx(0.4 * mg).epsilon(1e-12));
}

TEST_CASE("quality score of a constant image is exactly zero") {
    const QualityReport report = quality_score(make_image(12, 12, {70, 70, 70}), {});
    CHECK(report.m_gradient == 0.0);
    CHECK(report.m_entropy == 0.0);
    CHECK(report.m_noise == 0.0);
    CHECK(report.score == 0.0);
    CHECK(report.gradient_degenerate);
}

TEST_CASE("quality score is bit-deterministic") {
    Rng rng(999);
    const Image img = testutil::random_image(rng, 24, 24);
    const QualityReport a = quality_score(img, {});
    const QualityReport b = quality_score(img, {});
    CHECK(a.score == b.score);
    CHECK(a.m_gradient == b.m_gradient);
    CHECK(a.m_entropy == b.m_entropy);
    CHECK(a.m_noise == b.m_noise);
}

TEST_CASE("configuration contracts are enforced") {
    const Image img = make_image(8, 8, {1, 2, 3});
    QualityConfig cfg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(quality_score(img, cfg), Error);
    cfg = {};
    cfg.gamma_act = 1.5;
    CHECK_THROWS_AS(quality_score(img, cfg), Error);
    cfg = {};
    cfg.tau_l = 250;
    cfg.tau_u = 5;
    CHECK_THROWS_AS(quality_score(img, cfg), Error);
    cfg = {};
    cfg.c = -0.1;
    CHECK_THROWS_AS(quality_score(img, cfg), Error);
}
