#include "fgl/point_cloud.hpp"

#include <cmath>

namespace fgl {

void PointCloud::validate() const {
    if (points.rows() < 1) {
        throw std::invalid_argument("point cloud must contain at least one point");
    }
    if (!points.allFinite()) {
        throw std::invalid_argument("point cloud contains non-finite coordinates");
    }
    if (normals) {
        if (normals->rows() != points.rows()) {
            throw std::invalid_argument("normal count does not match point count");
        }
        for (Eigen::Index i = 0; i < normals->rows(); ++i) {
            if (std::abs(normals->row(i).norm() - 1.0) > 1e-9) {
                throw std::invalid_argument("normals must be unit-length");
            }
        }
    }
}

std::pair<Vec3, Vec3> PointCloud::bounding_box() const {
    return {points.colwise().minCoeff(), points.colwise().maxCoeff()};
}

double PointCloud::bounding_box_diagonal() const {
    auto [lo, hi] = bounding_box();
    return (hi - lo).norm();
}

} // namespace fgl
