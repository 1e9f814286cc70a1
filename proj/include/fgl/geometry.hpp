#pragma once

#include "fgl/point_cloud.hpp"
#include "fgl/spatial_index.hpp"

#include <cstdint>
#include <vector>

namespace fgl {

/// Selects m well-spread point indices by farthest-point sampling.
///
/// The first center is drawn uniformly from a generator seeded with `seed`;
/// each subsequent center maximizes the minimum distance to the centers
/// chosen so far (ties by ascending index). Deterministic given
/// (cloud, m, seed). Throws std::invalid_argument if m < 1 or m > N.
std::vector<Eigen::Index> farthest_point_sample(const PointCloud& cloud, Eigen::Index m,
                                                uint64_t seed);

/// As above but with the first center pinned explicitly.
std::vector<Eigen::Index> farthest_point_sample_from(const PointCloud& cloud, Eigen::Index m,
                                                     Eigen::Index first);

/// Per-point surface normals by local PCA over the k-neighborhood.
///
/// The normal is the unit eigenvector of the neighborhood covariance with
/// the smallest eigenvalue, sign-fixed so the component of largest absolute
/// value is positive. Degenerate neighborhoods (all points coincident) get
/// (0,0,1) and a warning flag. Requires k >= 3 and N >= k.
PointCloud estimate_normals(const PointCloud& cloud, Eigen::Index k,
                            std::vector<uint8_t>* warnings = nullptr);

} // namespace fgl
