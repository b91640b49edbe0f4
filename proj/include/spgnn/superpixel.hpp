#pragma once

#include <vector>

#include "spgnn/tensor.hpp"

namespace spgnn {

// Partition of an image into connected superpixels.
struct SuperpixelMap {
    std::vector<int> labels;  // h*w row-major pixel labels in [0, count)
    int h = 0;
    int w = 0;
    int count = 0;
    std::vector<int> sizes;  // pixel count per label

    int label_at(int y, int x) const { return labels[static_cast<size_t>(y) * w + x]; }
};

// Throws std::runtime_error if the map violates the partition contract:
// labels in range, every label non-empty with matching size, 4-connected.
void validate_superpixel_map(const SuperpixelMap& map);

// SLIC clustering: grid-initialized centers refined by windowed assignment
// with distance sqrt(d_rgb^2 + (compactness*d_xy/S)^2), colors on a 0-255
// scale, followed by a connectivity pass. The returned count may differ
// from m_target.
SuperpixelMap slic_segment(const Tensor& img, int m_target, double compactness = 10.0,
                           int iters = 10);

// Per-superpixel mean RGB, shape [M,3].
Tensor superpixel_features(const Tensor& img, const SuperpixelMap& map);

// Per-superpixel mean pixel position as (x,y), normalized by (w-1,h-1)
// into [0,1]^2; shape [M,2].
Tensor superpixel_centroids(const SuperpixelMap& map);

// Gaussian affinity exp(-||c_i - c_j||^2 / sigma2) over normalized
// centroids with fixed sigma2 = 0.1*pi; shape [M,M].
Tensor superpixel_adjacency(const Tensor& centroids);

// Symmetric normalization D^{-1/2} A D^{-1/2} with D the row-sum diagonal.
// Throws on non-square input or a non-positive row sum.
Tensor normalize_adjacency(const Tensor& a);

struct SuperpixelGraph {
    Tensor features;   // [M,3]
    Tensor centroids;  // [M,2]
    Tensor adjacency;  // [M,M]
    double sigma2 = 0.0;
};

SuperpixelGraph build_superpixel_graph(const Tensor& img, const SuperpixelMap& map);

inline constexpr double kSuperpixelSigma2 = 0.1 * 3.14159265358979323846;

}  // namespace spgnn
