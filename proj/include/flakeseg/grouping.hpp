// Unsupervised grouping of micrographs by background color: each image is
// reduced to its mean chroma pair, and k-means++ with squared Euclidean
// distance clusters those points. The group ids drive per-group weak
// learning downstream.
#pragma once

#include "flakeseg/image.hpp"
#include "flakeseg/manifest.hpp"

#include <array>
#include <vector>

namespace flakeseg {

/// Mean chroma of one image; the manifest index ties it back to its record.
struct ChromaPoint {
    double cb_mean = 0.0;
    double cr_mean = 0.0;
    std::size_t image_ref = 0;
};

struct Grouping {
    int k = 0;
    std::vector<std::array<double, 2>> centroids; // (cb, cr) per group
    std::vector<int> assignment;                  // per point, 0..k-1
    double inertia = 0.0;                         // sum of squared distances to assigned centroids
    double silhouette = 0.0;                      // mean silhouette of the final assignment
};

/// Arithmetic mean of the Cb and Cr planes.
ChromaPoint chroma_features(const Image& img, std::size_t image_ref = 0);

/// k-means++ seeding: first centroid uniform over the points, each next
/// one drawn with probability proportional to the squared distance to the
/// nearest centroid chosen so far. Requires k <= number of distinct
/// points.
std::vector<std::array<double, 2>> kmeanspp_seed(const std::vector<ChromaPoint>& points, int k,
                                                 std::uint64_t seed);

/// Lloyd iterations from a k-means++ seeding until the largest centroid
/// shift drops below tol (or max_iters). Ties in assignment go to the
/// lowest centroid index. A cluster that empties is re-seeded at the
/// point currently farthest from its own centroid, which keeps the
/// inertia non-increasing.
Grouping kmeans_cluster(const std::vector<ChromaPoint>& points, int k, std::uint64_t seed,
                        int max_iters = 300, double tol = 1e-6);

/// Mean silhouette coefficient of an assignment (Euclidean distances;
/// singleton clusters score 0).
double mean_silhouette(const std::vector<ChromaPoint>& points, const std::vector<int>& assignment,
                       int k);

/// Clusters with every k in [k_min, k_max] (clamped to the number of
/// distinct points) and keeps the k with the highest mean silhouette,
/// preferring the smaller k on ties. A single distinct point collapses to
/// k = 1.
Grouping auto_cluster(const std::vector<ChromaPoint>& points, std::uint64_t seed, int k_min = 2,
                      int k_max = 8);

/// Returns the manifest with group ids filled in from the grouping
/// (points indexed in record order). Idempotent.
DatasetManifest assign_groups(const DatasetManifest& manifest, const Grouping& grouping);

} // namespace flakeseg
