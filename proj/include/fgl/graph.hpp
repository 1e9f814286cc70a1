#pragma once

#include "fgl/point_cloud.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <vector>

namespace fgl {

/// Overlapping patches: each patch is a center point plus its k nearest
/// neighbors; member lists store original point indices, center first.
struct PatchSet {
    std::vector<Eigen::Index> center_indices;            // M entries
    std::vector<std::vector<Eigen::Index>> members;      // M lists of k+1
    PointMatrix centers;                                 // M x 3 patch centroids

    Eigen::Index patch_count() const { return static_cast<Eigen::Index>(members.size()); }
    Eigen::Index patch_size() const {
        return members.empty() ? 0 : static_cast<Eigen::Index>(members.front().size());
    }
    /// Total flattened patch points, (k+1)*M.
    Eigen::Index node_count() const { return patch_count() * patch_size(); }
    /// Flattened node id for within-patch point `local` of patch `p`.
    Eigen::Index node_id(Eigen::Index p, Eigen::Index local) const {
        return p * patch_size() + local;
    }
    /// Original point index behind a flattened node id.
    Eigen::Index original_index(Eigen::Index node) const {
        return members[node / patch_size()][node % patch_size()];
    }
};

/// Correspondence edges between flattened patch points, carrying the
/// feature difference g and squared observation distance d per edge.
struct CorrespondenceEdge {
    Eigen::Index a = 0, b = 0;   // flattened node ids, a < b
    Eigen::VectorXd g;           // feature difference f_a - f_b
    double d = 0.0;              // squared center-relative distance
};

struct EdgeSet {
    std::vector<CorrespondenceEdge> edges;
    Eigen::Index node_count = 0;

    bool empty() const { return edges.empty(); }
    Eigen::Index feature_dim() const {
        return edges.empty() ? 0 : edges.front().g.size();
    }
    /// Sum of d over all edges (upper bound of the GLR objective).
    double total_d() const;
};

using GraphLaplacian = Eigen::SparseMatrix<double>;

/// Patch around each requested center point: the center plus its k nearest
/// neighbors in `cloud`. The recorded patch center coordinates are the
/// member centroids, which are far less noise-sensitive than the raw center
/// points and anchor the coordinate solve's constant term.
/// Requires k+1 <= N and distinct valid centers.
PatchSet extract_patches(const PointCloud& cloud, const std::vector<Eigen::Index>& center_indices,
                         Eigen::Index k);

/// For each patch, the eps nearest other patches by center distance
/// (ascending, ties by index). Throws std::invalid_argument if eps >= M.
std::vector<std::vector<Eigen::Index>> patch_neighbors(const PatchSet& patch_set,
                                                       Eigen::Index eps);

/// Connects each point of a patch to its nearest point in every adjacent
/// patch, matching in coordinates of `observation` relative to each patch's
/// sampled center point (matching against the raw seed points is markedly
/// more effective here than against the centroids). Duplicate unordered
/// node pairs are merged. With `mutual_only`, keeps only pairs that select
/// each other.
EdgeSet build_correspondences(const PatchSet& patch_set,
                              const std::vector<std::vector<Eigen::Index>>& neighbors,
                              const Eigen::MatrixXd& features, const PointCloud& observation,
                              bool mutual_only = false);

/// Sparse combinatorial Laplacian L = D - W with w = exp(-g^T M g) per edge.
GraphLaplacian build_laplacian(const EdgeSet& edge_set, const Eigen::MatrixXd& metric);

} // namespace fgl
