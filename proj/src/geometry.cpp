#include "fgl/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <random>

namespace fgl {

std::vector<Eigen::Index> farthest_point_sample_from(const PointCloud& cloud, Eigen::Index m,
                                                     Eigen::Index first) {
    const Eigen::Index n = cloud.size();
    if (m < 1 || m > n) {
        throw std::invalid_argument("farthest_point_sample: m must satisfy 1 <= m <= N");
    }
    if (first < 0 || first >= n) {
        throw std::invalid_argument("farthest_point_sample: first index out of range");
    }
    std::vector<Eigen::Index> centers;
    centers.reserve(m);
    centers.push_back(first);

    Eigen::VectorXd min_d2 =
        (cloud.points.rowwise() - cloud.points.row(first)).rowwise().squaredNorm();
    for (Eigen::Index c = 1; c < m; ++c) {
        Eigen::Index best = 0;
        double best_d2 = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        centers.push_back(best);
        min_d2 = min_d2.cwiseMin(
            (cloud.points.rowwise() - cloud.points.row(best)).rowwise().squaredNorm());
    }
    return centers;
}

std::vector<Eigen::Index> farthest_point_sample(const PointCloud& cloud, Eigen::Index m,
                                                uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, cloud.size() - 1);
    return farthest_point_sample_from(cloud, m, pick(rng));
}

PointCloud estimate_normals(const PointCloud& cloud, Eigen::Index k,
                            std::vector<uint8_t>* warnings) {
    const Eigen::Index n = cloud.size();
    if (k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");
    if (n < k) throw std::invalid_argument("estimate_normals: cloud smaller than k");

    SpatialIndex index(cloud.points);
    PointMatrix normals(n, 3);
    if (warnings) warnings->assign(n, 0);

    for (Eigen::Index i = 0; i < n; ++i) {
        auto nbrs = index.knn(cloud.points.row(i), k);
        Vec3 mean = Vec3::Zero();
        for (auto j : nbrs) mean += cloud.points.row(j).transpose();
        mean /= static_cast<double>(k);
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (auto j : nbrs) {
            Vec3 c = cloud.points.row(j).transpose() - mean;
            cov += c * c.transpose();
        }
        if (cov.norm() < 1e-24) {
            normals.row(i) = Vec3(0, 0, 1);
            if (warnings) (*warnings)[i] = 1;
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        Vec3 normal = es.eigenvectors().col(0); // smallest eigenvalue
        int dominant = 0;
        normal.cwiseAbs().maxCoeff(&dominant);
        if (normal[dominant] < 0) normal = -normal;
        normals.row(i) = normal.normalized();
    }
    PointCloud result = cloud;
    result.normals = std::move(normals);
    return result;
}

} // namespace fgl
