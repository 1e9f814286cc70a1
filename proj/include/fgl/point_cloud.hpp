#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>

namespace fgl {

using Vec3 = Eigen::Vector3d;
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// A point cloud: N xyz coordinates plus optional per-point unit normals.
struct PointCloud {
    PointMatrix points;
    std::optional<PointMatrix> normals;

    PointCloud() = default;
    explicit PointCloud(PointMatrix pts) : points(std::move(pts)) {}

    Eigen::Index size() const { return points.rows(); }
    bool has_normals() const { return normals.has_value(); }

    /// Throws std::invalid_argument if any invariant is violated:
    /// N >= 1, finite coordinates, unit normals (within 1e-9) when present.
    void validate() const;

    /// Axis-aligned bounding box as (min, max).
    std::pair<Vec3, Vec3> bounding_box() const;

    double bounding_box_diagonal() const;
};

} // namespace fgl
