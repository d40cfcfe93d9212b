#include "flakeseg/grouping.hpp"

#include "flakeseg/enhance.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_util.hpp"

using namespace flakeseg;

namespace {

std::vector<ChromaPoint> blob(double cb, double cr, double spread, int count, Rng& rng,
                              std::size_t ref_base = 0) {
    std::vector<ChromaPoint> points;
    for (int i = 0; i < count; ++i)
        points.push_back({cb + rng.uniform(-spread, spread), cr + rng.uniform(-spread, spread),
                          ref_base + i});
    return points;
}

double brute_force_two_cluster_inertia(const std::vector<ChromaPoint>& points) {
    const std::size_t n = points.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask < (1u << n) - 1; ++mask) {
        double cb[2] = {0, 0}, cr[2] = {0, 0};
        int cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int side = (mask >> i) & 1;
            cb[side] += points[i].cb_mean;
            cr[side] += points[i].cr_mean;
            ++cnt[side];
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int side = (mask >> i) & 1;
            const double db = points[i].cb_mean - cb[side] / cnt[side];
            const double dr = points[i].cr_mean - cr[side] / cnt[side];
            inertia += db * db + dr * dr;
        }
        best = std::min(best, inertia);
    }
    return best;
}

} // namespace

TEST_CASE("chroma features of a gray image sit at the neutral point") {
    const ChromaPoint p = chroma_features(make_image(9, 9, {77, 77, 77}), 3);
    CHECK(p.cb_mean == 128.0);
    CHECK(p.cr_mean == 128.0);
    CHECK(p.image_ref == 3);
}

TEST_CASE("chroma features of a two-color image average the two chroma pairs") {
    const auto ta = rgb_triple_to_ycbcr(200, 40, 40);
    const auto tb = rgb_triple_to_ycbcr(40, 40, 200);
    Image img = make_image(8, 8, {200, 40, 40});
    for (int y = 4; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            img.at(x, y, 0) = 40;
            img.at(x, y, 2) = 200;
        }
    const ChromaPoint p = chroma_features(img);
    CHECK(p.cb_mean == (ta[1] + tb[1]) / 2.0);
    CHECK(p.cr_mean == (ta[2] + tb[2]) / 2.0);
}

TEST_CASE("enhancement leaves chroma features essentially untouched") {
    Rng rng(4242);
    Image img = testutil::random_image(rng, 16, 16);
    // Skew toward bright values so the enhancement has real work to do.
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(128 + p / 2);

    // Bitwise invariance holds in YCbCr space.
    bool degenerate = false;
    const YCbCrImage out = enhance_to_ycbcr(img, {}, &degenerate);
    const YCbCrImage source = rgb_to_ycbcr(img);
    REQUIRE_FALSE(degenerate);
    CHECK(out.cb == source.cb);
    CHECK(out.cr == source.cr);

    // After the return trip to RGB, the mean drifts at most one level.
    const ChromaPoint before = chroma_features(img);
    const ChromaPoint after = chroma_features(enhance_image(img, {}).image);
    CHECK(std::abs(after.cb_mean - before.cb_mean) <= 1.0);
    CHECK(std::abs(after.cr_mean - before.cr_mean) <= 1.0);
}

TEST_CASE("seeding with k equal to the distinct count selects every distinct point") {
    std::vector<ChromaPoint> points = {{10, 10, 0}, {10, 10, 1}, {50, 50, 2},
                                       {50, 50, 3}, {90, 10, 4}, {90, 10, 5}};
    const auto centroids = kmeanspp_seed(points, 3, 99);
    std::set<std::pair<double, double>> chosen;
    for (const auto& c : centroids) chosen.insert({c[0], c[1]});
    CHECK(chosen == std::set<std::pair<double, double>>{{10, 10}, {50, 50}, {90, 10}});
}

TEST_CASE("seeding rejects k beyond the distinct point count") {
    std::vector<ChromaPoint> points = {{10, 10, 0}, {10, 10, 1}, {50, 50, 2}};
    CHECK_THROWS_AS(kmeanspp_seed(points, 3, 1), Error);
    CHECK_THROWS_AS(kmeanspp_seed({}, 1, 1), Error);
    CHECK_THROWS_AS(kmeanspp_seed(points, 0, 1), Error);
}

TEST_CASE("k-means++ virtually always splits two far blobs at seeding time") {
    Rng rng(77);
    std::vector<ChromaPoint> points = blob(20, 20, 1.0, 5, rng);
    const auto other = blob(200, 200, 1.0, 5, rng, 5);
    points.insert(points.end(), other.begin(), other.end());

    int split = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto centroids = kmeanspp_seed(points, 2, seed);
        const bool first_low = centroids[0][0] < 100.0;
        const bool second_low = centroids[1][0] < 100.0;
        if (first_low != second_low) ++split;
    }
    CHECK(split >= 990);
}

TEST_CASE("k=1 clustering returns the mean and the total squared spread") {
    const std::vector<ChromaPoint> points = {{0, 0, 0}, {10, 0, 1}, {0, 10, 2}, {10, 10, 3}};
    const Grouping g = kmeans_cluster(points, 1, 5);
    CHECK(g.centroids[0][0] == doctest::Approx(5.0));
    CHECK(g.centroids[0][1] == doctest::Approx(5.0));
    // Each point sits at squared distance 50 from the center.
    CHECK(g.inertia == doctest::Approx(200.0));

    const Grouping identical = kmeans_cluster({{7, 7, 0}, {7, 7, 1}, {7, 7, 2}}, 1, 5);
    CHECK(identical.inertia == 0.0);
}

TEST_CASE("two-blob clustering matches the brute-force optimal partition") {
    Rng rng(31);
    std::vector<ChromaPoint> points = blob(40, 60, 3.0, 4, rng);
    const auto other = blob(180, 150, 3.0, 4, rng, 4);
    points.insert(points.end(), other.begin(), other.end());

    const Grouping g = kmeans_cluster(points, 2, 11);
    CHECK(g.inertia == doctest::Approx(brute_force_two_cluster_inertia(points)).epsilon(1e-9));

    // Assignment matches blob membership.
    for (int i = 0; i < 4; ++i) REQUIRE(g.assignment[i] == g.assignment[0]);
    for (int i = 4; i < 8; ++i) REQUIRE(g.assignment[i] == g.assignment[4]);
    CHECK(g.assignment[0] != g.assignment[4]);
}

TEST_CASE("the final assignment is a fixed point of the centroids") {
    Rng rng(66);
    std::vector<ChromaPoint> points;
    for (int i = 0; i < 40; ++i)
        points.push_back({rng.uniform(0, 255), rng.uniform(0, 255), static_cast<std::size_t>(i)});
    const Grouping g = kmeans_cluster(points, 4, 17);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double assigned_d = 0.0, best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < g.k; ++j) {
            const double db = points[i].cb_mean - g.centroids[j][0];
            const double dr = points[i].cr_mean - g.centroids[j][1];
            const double d = db * db + dr * dr;
            if (j == g.assignment[i]) assigned_d = d;
            best_d = std::min(best_d, d);
        }
        REQUIRE(assigned_d == best_d);
    }
}

TEST_CASE("clustering is deterministic under a fixed seed") {
    Rng rng(13);
    std::vector<ChromaPoint> points;
    for (int i = 0; i < 30; ++i)
        points.push_back({rng.uniform(0, 255), rng.uniform(0, 255), static_cast<std::size_t>(i)});
    const Grouping a = kmeans_cluster(points, 3, 21);
    const Grouping b = kmeans_cluster(points, 3, 21);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assignment == b.assignment);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("silhouette-guided selection recovers three separated blobs") {
    Rng rng(5);
    std::vector<ChromaPoint> points = blob(30, 30, 2.0, 6, rng);
    auto second = blob(128, 128, 2.0, 6, rng, 6);
    auto third = blob(220, 60, 2.0, 6, rng, 12);
    points.insert(points.end(), second.begin(), second.end());
    points.insert(points.end(), third.begin(), third.end());

    const Grouping g = auto_cluster(points, 7);
    CHECK(g.k == 3);
    CHECK(g.silhouette > 0.8);
}

TEST_CASE("a single distinct point collapses to one group") {
    const std::vector<ChromaPoint> points = {{128, 128, 0}, {128, 128, 1}};
    const Grouping g = auto_cluster(points, 3);
    CHECK(g.k == 1);
    CHECK(g.assignment == std::vector<int>{0, 0});
    CHECK(g.inertia == 0.0);
}

TEST_CASE("assign_groups stamps group ids and is idempotent") {
    DatasetManifest manifest;
    ManifestRecord a, b;
    a.image = "/data/a.png";
    b.image = "/data/b.png";
    manifest.records = {a, b};

    Grouping g;
    g.k = 2;
    g.assignment = {1, 0};

    const DatasetManifest once = assign_groups(manifest, g);
    CHECK(once.records[0].group == 1);
    CHECK(once.records[1].group == 0);
    const DatasetManifest twice = assign_groups(once, g);
    CHECK(twice.records[0].group == 1);
    CHECK(twice.records[1].group == 0);

    const DatasetManifest empty = assign_groups(DatasetManifest{}, Grouping{});
    CHECK(empty.empty());

    Grouping short_g;
    short_g.assignment = {0};
    CHECK_THROWS_AS(assign_groups(manifest, short_g), Error);
}
