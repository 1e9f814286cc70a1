#include "fgl/geometry.hpp"
#include "fgl/spatial_index.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace {

fgl::PointCloud random_cloud(Eigen::Index n, uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-scale, scale);
    fgl::PointCloud cloud;
    cloud.points.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) cloud.points(i, a) = uni(rng);
    return cloud;
}

} // namespace

TEST_CASE("knn ordering by distance") {
    fgl::PointCloud cloud;
    cloud.points.resize(3, 3);
    cloud.points << 0, 0, 0, 1, 0, 0, 3, 0, 0;
    fgl::SpatialIndex index(cloud.points);
    auto result = fgl::knn_search(index, fgl::Vec3(0, 0, 0), 2);
    REQUIRE(result.size() == 2);
    CHECK(result[0] == 0);
    CHECK(result[1] == 1);
}

TEST_CASE("knn single point") {
    fgl::PointCloud cloud;
    cloud.points.resize(1, 3);
    cloud.points << 4, 5, 6;
    fgl::SpatialIndex index(cloud.points);
    CHECK(index.knn(fgl::Vec3(100, -3, 0), 1) == std::vector<Eigen::Index>{0});
}

TEST_CASE("knn matches brute-force scan on random clouds") {
    auto cloud = random_cloud(100, 11);
    fgl::SpatialIndex index(cloud.points);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uni(-1.2, 1.2);
    for (int q = 0; q < 50; ++q) {
        fgl::Vec3 query(uni(rng), uni(rng), uni(rng));
        CHECK(index.knn(query, 5) == oracle::brute_knn(cloud.points, query, 5));
    }
}

TEST_CASE("knn exact under ties") {
    // Many duplicated coordinates: ties must resolve by ascending index.
    fgl::PointCloud cloud;
    cloud.points.resize(60, 3);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> grid(0, 2);
    for (Eigen::Index i = 0; i < 60; ++i)
        for (int a = 0; a < 3; ++a) cloud.points(i, a) = grid(rng);
    fgl::SpatialIndex index(cloud.points);
    for (int q = 0; q < 20; ++q) {
        fgl::Vec3 query(grid(rng), grid(rng), grid(rng));
        CHECK(index.knn(query, 10) == oracle::brute_knn(cloud.points, query, 10));
    }
}

TEST_CASE("knn rejects bad k") {
    auto cloud = random_cloud(5, 1);
    fgl::SpatialIndex index(cloud.points);
    CHECK_THROWS_AS(index.knn(fgl::Vec3::Zero(), 0), std::invalid_argument);
    CHECK_THROWS_AS(index.knn(fgl::Vec3::Zero(), 6), std::invalid_argument);
}

TEST_CASE("knn permutation invariance") {
    auto cloud = random_cloud(80, 21);
    std::vector<Eigen::Index> perm(80);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(22));
    fgl::PointMatrix shuffled(80, 3);
    for (Eigen::Index i = 0; i < 80; ++i) shuffled.row(i) = cloud.points.row(perm[i]);

    fgl::SpatialIndex a(cloud.points), b(shuffled);
    fgl::Vec3 query(0.1, -0.2, 0.3);
    auto ra = a.knn(query, 7);
    auto rb = b.knn(query, 7);
    std::set<Eigen::Index> sa(ra.begin(), ra.end()), sb;
    for (auto i : rb) sb.insert(perm[i]);
    CHECK(sa == sb);
}

TEST_CASE("farthest point sample selects all points when m equals N") {
    auto cloud = random_cloud(12, 3);
    auto picks = fgl::farthest_point_sample(cloud, 12, 99);
    std::set<Eigen::Index> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 12);
    CHECK(*unique.begin() == 0);
    CHECK(*unique.rbegin() == 11);
}

TEST_CASE("farthest point sample picks the far endpoint on a line") {
    fgl::PointCloud cloud;
    cloud.points.resize(10, 3);
    for (Eigen::Index i = 0; i < 10; ++i) cloud.points.row(i) << double(i), 0, 0;
    auto picks = fgl::farthest_point_sample_from(cloud, 2, 0);
    REQUIRE(picks.size() == 2);
    CHECK(picks[0] == 0);
    CHECK(picks[1] == 9);
}

TEST_CASE("farthest point sample is deterministic and spread") {
    auto cloud = random_cloud(500, 7);
    auto picks = fgl::farthest_point_sample(cloud, 50, 123);
    CHECK(picks == fgl::farthest_point_sample(cloud, 50, 123));
    std::set<Eigen::Index> unique(picks.begin(), picks.end());
    REQUIRE(unique.size() == 50);

    auto min_pairwise = [&](const std::vector<Eigen::Index>& idx) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < idx.size(); ++i)
            for (size_t j = i + 1; j < idx.size(); ++j)
                best = std::min(best,
                                (cloud.points.row(idx[i]) - cloud.points.row(idx[j])).norm());
        return best;
    };
    double fps_spread = min_pairwise(picks);

    // Farthest-point centers should be at least as spread as any random subset.
    std::vector<Eigen::Index> all(500);
    std::iota(all.begin(), all.end(), 0);
    for (uint64_t seed = 0; seed < 100; ++seed) {
        std::vector<Eigen::Index> subset = all;
        std::shuffle(subset.begin(), subset.end(), std::mt19937_64(seed));
        subset.resize(50);
        CHECK(fps_spread >= min_pairwise(subset));
    }
}

TEST_CASE("farthest point sample rigid-transform invariance with pinned start") {
    auto cloud = random_cloud(120, 31);
    auto base = fgl::farthest_point_sample_from(cloud, 15, 4);

    double c = std::cos(0.7), s = std::sin(0.7);
    Eigen::Matrix3d rot;
    rot << c, -s, 0, s, c, 0, 0, 0, 1;
    fgl::PointCloud moved;
    moved.points = (cloud.points * rot.transpose()).rowwise() + Eigen::RowVector3d(3, -1, 2);
    CHECK(fgl::farthest_point_sample_from(moved, 15, 4) == base);
}

TEST_CASE("farthest point sample rejects bad m") {
    auto cloud = random_cloud(5, 1);
    CHECK_THROWS_AS(fgl::farthest_point_sample(cloud, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(fgl::farthest_point_sample(cloud, 6, 0), std::invalid_argument);
}

TEST_CASE("normals on the z=0 plane") {
    fgl::PointCloud cloud;
    cloud.points.resize(64, 3);
    Eigen::Index n = 0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) cloud.points.row(n++) << i * 0.1, j * 0.1, 0.0;
    auto with_normals = fgl::estimate_normals(cloud, 6);
    REQUIRE(with_normals.has_normals());
    for (Eigen::Index i = 0; i < 64; ++i) {
        CHECK(with_normals.normals->row(i).isApprox(Eigen::RowVector3d(0, 0, 1), 1e-9));
    }
}

TEST_CASE("normals on the x=5 plane") {
    fgl::PointCloud cloud;
    cloud.points.resize(36, 3);
    Eigen::Index n = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) cloud.points.row(n++) << 5.0, i * 0.2, j * 0.2;
    auto with_normals = fgl::estimate_normals(cloud, 5);
    for (Eigen::Index i = 0; i < 36; ++i) {
        CHECK(with_normals.normals->row(i).isApprox(Eigen::RowVector3d(1, 0, 0), 1e-9));
    }
}

TEST_CASE("normals on the unit sphere approximate the radial direction") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    fgl::PointCloud cloud;
    cloud.points.resize(1000, 3);
    for (Eigen::Index i = 0; i < 1000; ++i) {
        fgl::Vec3 v(gauss(rng), gauss(rng), gauss(rng));
        cloud.points.row(i) = v.normalized().transpose();
    }
    auto with_normals = fgl::estimate_normals(cloud, 12);
    double angle_sum = 0.0;
    for (Eigen::Index i = 0; i < 1000; ++i) {
        double cosine = std::abs(with_normals.normals->row(i).dot(cloud.points.row(i)));
        angle_sum += std::acos(std::min(1.0, cosine));
    }
    double mean_degrees = angle_sum / 1000.0 * 180.0 / M_PI;
    CHECK(mean_degrees < 10.0);
}

TEST_CASE("normals are unit length and degenerate neighborhoods are flagged") {
    fgl::PointCloud cloud;
    cloud.points.resize(8, 3);
    cloud.points.setZero();                       // all coincident -> degenerate
    std::vector<uint8_t> warnings;
    auto with_normals = fgl::estimate_normals(cloud, 4, &warnings);
    REQUIRE(warnings.size() == 8);
    for (Eigen::Index i = 0; i < 8; ++i) {
        CHECK(warnings[i] == 1);
        CHECK(with_normals.normals->row(i).isApprox(Eigen::RowVector3d(0, 0, 1), 1e-12));
    }

    auto randomized = fgl::estimate_normals(random_cloud(100, 41), 8);
    for (Eigen::Index i = 0; i < 100; ++i) {
        CHECK(std::abs(randomized.normals->row(i).norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("estimate_normals rejects bad k") {
    auto cloud = random_cloud(10, 2);
    CHECK_THROWS_AS(fgl::estimate_normals(cloud, 2), std::invalid_argument);
    CHECK_THROWS_AS(fgl::estimate_normals(cloud, 11), std::invalid_argument);
}

TEST_CASE("point cloud validation") {
    fgl::PointCloud empty;
    empty.points.resize(0, 3);
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

    fgl::PointCloud bad = random_cloud(3, 9);
    bad.points(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    fgl::PointCloud with_bad_normals = random_cloud(3, 9);
    with_bad_normals.normals = fgl::PointMatrix(3, 3);
    with_bad_normals.normals->setZero();
    CHECK_THROWS_AS(with_bad_normals.validate(), std::invalid_argument);

    fgl::PointCloud good = random_cloud(4, 10);
    good.validate();
    auto [lo, hi] = good.bounding_box();
    CHECK((hi - lo).norm() == doctest::Approx(good.bounding_box_diagonal()));
}
