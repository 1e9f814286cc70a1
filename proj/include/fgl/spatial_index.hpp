#pragma once

#include "fgl/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace fgl {

/// Exact nearest-neighbor index over a fixed set of 3D points.
///
/// Immutable after construction and shareable across threads. Queries are
/// exact under Euclidean distance; ties are broken by ascending point index
/// so that results are bit-reproducible against a brute-force scan.
class SpatialIndex {
public:
    explicit SpatialIndex(const PointMatrix& points);

    Eigen::Index size() const { return points_.rows(); }

    /// Indices of the k nearest points to `query`, sorted by ascending
    /// distance (ties by ascending index). Throws std::invalid_argument
    /// if k < 1 or k > size().
    std::vector<Eigen::Index> knn(const Vec3& query, Eigen::Index k) const;

    /// Index of the single nearest point (convenience wrapper).
    Eigen::Index nearest(const Vec3& query) const;

private:
    struct Node {
        int axis = -1;             // -1 marks a leaf
        double split = 0.0;
        Eigen::Index begin = 0, end = 0; // leaf point range
        int32_t left = -1, right = -1;
    };

    int32_t build(Eigen::Index begin, Eigen::Index end);

    PointMatrix points_;                 // own copy, reordered into leaves
    std::vector<Eigen::Index> ids_;      // original index per stored row
    std::vector<Node> nodes_;
    int32_t root_ = -1;

    static constexpr Eigen::Index kLeafSize = 16;
};

/// k nearest neighbors of `query` in the indexed cloud; see SpatialIndex::knn.
inline std::vector<Eigen::Index> knn_search(const SpatialIndex& index, const Vec3& query,
                                            Eigen::Index k) {
    return index.knn(query, k);
}

} // namespace fgl
