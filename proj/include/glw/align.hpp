#pragma once

#include <cstdint>
#include <vector>

#include "glw/tensor.hpp"

namespace glw {

// Unsupervised geometry-matching utilities used to initialize the workspace
// translators: whitening, k-means, assignment, and whitened-space ICP. All
// deterministic for fixed seeds.

struct Whitening {
    Tensor mean;       // [d]
    Tensor forward;    // d x d, y = (x - mean) * forward
    Tensor inverse;    // d x d, x = y * inverse + mean
};

// Whitening from the sample mean/covariance (symmetric inverse square root).
Whitening fit_whitening(const Tensor& x);
Tensor apply_whitening(const Whitening& w, const Tensor& x);

struct KMeansResult {
    Tensor centroids;            // c x d
    std::vector<int> assignment; // n
    double inertia = 0.0;        // sum of squared distances to assigned centroid
};

// Lloyd's algorithm with k-means++ seeding; `restarts` runs keep the lowest
// inertia (well-separated clusters still trip single runs now and then).
KMeansResult kmeans(const Tensor& x, std::size_t c, std::uint64_t seed,
                    std::size_t iters = 50, std::size_t restarts = 8);

// Mutual nearest neighbors between two clouds (capped subsample); row index
// pairs (src, dst).
std::vector<std::pair<std::size_t, std::size_t>> mutual_nn(const Tensor& a, const Tensor& b,
                                                           std::size_t cap = 1500);

// Hungarian assignment minimizing total cost; returns column index per row.
std::vector<std::size_t> hungarian(const Tensor& cost);

// Orthogonal axes from the kurtosis-weighted scatter E[|y|^2 y y^T], with
// eigenvalue-sorted columns and skewness-fixed signs. Two point clouds of the
// same underlying distribution map to (approximately) the same canonical
// frame, giving a correspondence-free alignment hypothesis.
Tensor moment_axes(const Tensor& y);

// Iterative closest point between whitened clouds: returns the orthogonal R
// (y_src * R ~ y_dst) refined from `init`, plus the mean squared
// nearest-neighbor residual used for hypothesis selection.
struct IcpResult {
    Tensor rotation;
    double residual = 0.0;
};
IcpResult icp_refine(const Tensor& y_src, const Tensor& y_dst, const Tensor& init,
                     std::size_t iters = 12, std::size_t max_points = 600);

// Full alignment: best orthogonal map whitened(src) -> whitened(dst) selected
// by ICP residual across hypotheses (moment axes, identity, cluster matching).
Tensor align_whitened_clouds(const Tensor& y_src, const Tensor& y_dst,
                             std::size_t n_clusters, std::uint64_t seed);

}  // namespace glw
