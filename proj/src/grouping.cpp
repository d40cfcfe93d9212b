#include "flakeseg/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace flakeseg {

namespace {

inline double sqdist(const ChromaPoint& p, const std::array<double, 2>& c) {
    const double db = p.cb_mean - c[0];
    const double dr = p.cr_mean - c[1];
    return db * db + dr * dr;
}

std::size_t count_distinct(const std::vector<ChromaPoint>& points) {
    std::set<std::pair<double, double>> unique;
    for (const ChromaPoint& p : points) unique.insert({p.cb_mean, p.cr_mean});
    return unique.size();
}

// Nearest centroid with ties resolved toward the lowest index.
int nearest(const ChromaPoint& p, const std::vector<std::array<double, 2>>& centroids) {
    int best = 0;
    double best_d = sqdist(p, centroids[0]);
    for (std::size_t j = 1; j < centroids.size(); ++j) {
        const double d = sqdist(p, centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

} // namespace

ChromaPoint chroma_features(const Image& img, std::size_t image_ref) {
    const YCbCrImage ycc = rgb_to_ycbcr(img);
    double cb = 0.0, cr = 0.0;
    for (std::size_t i = 0; i < ycc.pixel_count(); ++i) {
        cb += ycc.cb[i];
        cr += ycc.cr[i];
    }
    const double n = static_cast<double>(ycc.pixel_count());
    return {cb / n, cr / n, image_ref};
}

std::vector<std::array<double, 2>> kmeanspp_seed(const std::vector<ChromaPoint>& points, int k,
                                                 std::uint64_t seed) {
    if (points.empty()) throw Error("cannot seed centroids from an empty point set");
    if (k < 1) throw Error("k must be positive");
    if (static_cast<std::size_t>(k) > count_distinct(points))
        throw Error("k = " + std::to_string(k) + " exceeds the " +
                    std::to_string(count_distinct(points)) + " distinct points");

    Rng rng(seed);
    std::vector<std::array<double, 2>> centroids;
    centroids.reserve(k);
    const ChromaPoint& first = points[rng.below(points.size())];
    centroids.push_back({first.cb_mean, first.cr_mean});

    std::vector<double> d2(points.size());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sqdist(points[i], c));
            d2[i] = best;
            total += best;
        }
        // total > 0 is guaranteed while distinct points remain unchosen.
        double u = rng.uniform() * total;
        std::size_t pick = points.size() - 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            u -= d2[i];
            if (u <= 0.0 && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        // Guard against landing on a zero-weight trailing point through
        // accumulated rounding: walk back to the nearest positive weight.
        while (d2[pick] == 0.0) --pick;
        centroids.push_back({points[pick].cb_mean, points[pick].cr_mean});
    }
    return centroids;
}

Grouping kmeans_cluster(const std::vector<ChromaPoint>& points, int k, std::uint64_t seed,
                        int max_iters, double tol) {
    Grouping grouping;
    grouping.k = k;
    grouping.centroids = kmeanspp_seed(points, k, seed);
    grouping.assignment.assign(points.size(), 0);

    for (int iter = 0; iter < max_iters; ++iter) {
        // Assignment step.
        for (std::size_t i = 0; i < points.size(); ++i)
            grouping.assignment[i] = nearest(points[i], grouping.centroids);

        // A cluster with no members grabs the point that fits its current
        // cluster worst; the move can only shrink the inertia.
        for (int j = 0; j < k; ++j) {
            if (std::count(grouping.assignment.begin(), grouping.assignment.end(), j) > 0) continue;
            std::size_t worst = 0;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const double d = sqdist(points[i], grouping.centroids[grouping.assignment[i]]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            grouping.centroids[j] = {points[worst].cb_mean, points[worst].cr_mean};
            grouping.assignment[worst] = j;
        }

        // Update step.
        double shift = 0.0;
        for (int j = 0; j < k; ++j) {
            double cb = 0.0, cr = 0.0;
            std::size_t members = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (grouping.assignment[i] != j) continue;
                cb += points[i].cb_mean;
                cr += points[i].cr_mean;
                ++members;
            }
            const std::array<double, 2> updated = {cb / members, cr / members};
            shift = std::max(shift, std::sqrt(sqdist({grouping.centroids[j][0],
                                                      grouping.centroids[j][1]},
                                                     updated)));
            grouping.centroids[j] = updated;
        }
        if (shift < tol) break;
    }

    // Final assignment is a fixed point of the last centroids.
    grouping.inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        grouping.assignment[i] = nearest(points[i], grouping.centroids);
        grouping.inertia += sqdist(points[i], grouping.centroids[grouping.assignment[i]]);
    }
    grouping.silhouette = mean_silhouette(points, grouping.assignment, k);
    return grouping;
}

double mean_silhouette(const std::vector<ChromaPoint>& points, const std::vector<int>& assignment,
                       int k) {
    if (points.size() != assignment.size()) throw Error("assignment size mismatch");
    if (k < 2) return 0.0;
    const std::size_t n = points.size();
    std::vector<std::size_t> cluster_size(k, 0);
    for (int a : assignment) ++cluster_size[a];

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int own = assignment[i];
        if (cluster_size[own] <= 1) continue; // singleton scores 0

        std::vector<double> mean_dist(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = std::sqrt(sqdist(points[i], {points[j].cb_mean, points[j].cr_mean}));
            mean_dist[assignment[j]] += d;
        }
        const double a = mean_dist[own] / static_cast<double>(cluster_size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || cluster_size[c] == 0) continue;
            b = std::min(b, mean_dist[c] / static_cast<double>(cluster_size[c]));
        }
        if (!std::isfinite(b)) continue; // no other non-empty cluster
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

Grouping auto_cluster(const std::vector<ChromaPoint>& points, std::uint64_t seed, int k_min,
                      int k_max) {
    if (points.empty()) throw Error("cannot cluster an empty point set");
    const std::size_t distinct = count_distinct(points);
    if (distinct == 1) {
        Grouping g;
        g.k = 1;
        g.centroids = {{points[0].cb_mean, points[0].cr_mean}};
        g.assignment.assign(points.size(), 0);
        g.inertia = 0.0;
        g.silhouette = 0.0;
        return g;
    }

    const int hi = std::min<int>(k_max, static_cast<int>(distinct));
    const int lo = std::min(k_min, hi);
    Grouping best;
    bool have = false;
    for (int k = lo; k <= hi; ++k) {
        Grouping g = kmeans_cluster(points, k, mix_seed(seed, {static_cast<std::uint64_t>(k)}));
        if (!have || g.silhouette > best.silhouette) {
            best = std::move(g);
            have = true;
        }
    }
    return best;
}

DatasetManifest assign_groups(const DatasetManifest& manifest, const Grouping& grouping) {
    if (manifest.size() != grouping.assignment.size())
        throw Error("grouping covers " + std::to_string(grouping.assignment.size()) +
                    " records but the manifest has " + std::to_string(manifest.size()));
    DatasetManifest out = manifest;
    for (std::size_t i = 0; i < out.records.size(); ++i)
        out.records[i].group = grouping.assignment[i];
    return out;
}

} // namespace flakeseg
