#include "fgl/graph.hpp"

#include "fgl/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_set>

namespace fgl {

double EdgeSet::total_d() const {
    double sum = 0.0;
    for (const auto& e : edges) sum += e.d;
    return sum;
}

PatchSet extract_patches(const PointCloud& cloud, const std::vector<Eigen::Index>& center_indices,
                         Eigen::Index k) {
    const Eigen::Index n = cloud.size();
    if (k + 1 > n) throw std::invalid_argument("extract_patches: k+1 exceeds point count");
    std::unordered_set<Eigen::Index> seen;
    for (auto c : center_indices) {
        if (c < 0 || c >= n) throw std::invalid_argument("extract_patches: center out of range");
        if (!seen.insert(c).second) {
            throw std::invalid_argument("extract_patches: duplicate center index");
        }
    }

    SpatialIndex index(cloud.points);
    PatchSet patches;
    patches.center_indices = center_indices;
    patches.centers.resize(static_cast<Eigen::Index>(center_indices.size()), 3);
    patches.members.reserve(center_indices.size());
    for (size_t p = 0; p < center_indices.size(); ++p) {
        Eigen::Index c = center_indices[p];
        auto nbrs = index.knn(cloud.points.row(c), k + 1);
        // The center is at distance zero but duplicates may tie; force it first.
        auto it = std::find(nbrs.begin(), nbrs.end(), c);
        if (it != nbrs.end()) {
            std::rotate(nbrs.begin(), it, it + 1);
        } else {
            nbrs.back() = c;
            std::rotate(nbrs.begin(), nbrs.end() - 1, nbrs.end());
        }
        Eigen::RowVector3d centroid = Eigen::RowVector3d::Zero();
        for (Eigen::Index idx : nbrs) centroid += cloud.points.row(idx);
        patches.centers.row(static_cast<Eigen::Index>(p)) =
            centroid / static_cast<double>(nbrs.size());
        patches.members.push_back(std::move(nbrs));
    }
    return patches;
}

std::vector<std::vector<Eigen::Index>> patch_neighbors(const PatchSet& patch_set,
                                                       Eigen::Index eps) {
    const Eigen::Index m = patch_set.patch_count();
    if (eps >= m) throw std::invalid_argument("patch_neighbors: eps must be < patch count");
    std::vector<std::vector<Eigen::Index>> result(m);
    std::vector<std::pair<double, Eigen::Index>> dists;
    for (Eigen::Index i = 0; i < m; ++i) {
        dists.clear();
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j == i) continue;
            dists.emplace_back((patch_set.centers.row(i) - patch_set.centers.row(j)).squaredNorm(),
                               j);
        }
        std::partial_sort(dists.begin(), dists.begin() + eps, dists.end());
        result[i].reserve(eps);
        for (Eigen::Index e = 0; e < eps; ++e) result[i].push_back(dists[e].second);
    }
    return result;
}

namespace {

// Nearest member of patch t to the center-relative point `rel`, ties by
// within-patch index.
Eigen::Index nearest_in_patch(const PatchSet& ps, const PointMatrix& pts, Eigen::Index t,
                              const Vec3& rel) {
    const auto& members = ps.members[t];
    Vec3 center = pts.row(ps.center_indices[t]).transpose();
    Eigen::Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < members.size(); ++l) {
        Vec3 rel_l = pts.row(members[l]).transpose() - center;
        double d2 = (rel - rel_l).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<Eigen::Index>(l);
        }
    }
    return best;
}

} // namespace

EdgeSet build_correspondences(const PatchSet& patch_set,
                              const std::vector<std::vector<Eigen::Index>>& neighbors,
                              const Eigen::MatrixXd& features, const PointCloud& observation,
                              bool mutual_only) {
    if (features.rows() != observation.size()) {
        throw std::invalid_argument("build_correspondences: feature rows must match point count");
    }
    if (features.cols() < 1) {
        throw std::invalid_argument("build_correspondences: features need K >= 1 columns");
    }
    const Eigen::Index m = patch_set.patch_count();
    const PointMatrix& pts = observation.points;

    EdgeSet edge_set;
    edge_set.node_count = patch_set.node_count();
    // Deterministic merge order: map keyed by (min node id, max node id).
    std::map<std::pair<Eigen::Index, Eigen::Index>, CorrespondenceEdge> merged;

    for (Eigen::Index s = 0; s < m; ++s) {
        Vec3 center_s = pts.row(patch_set.center_indices[s]).transpose();
        for (Eigen::Index t : neighbors[s]) {
            Vec3 center_t = pts.row(patch_set.center_indices[t]).transpose();
            for (size_t a = 0; a < patch_set.members[s].size(); ++a) {
                Eigen::Index pa = patch_set.members[s][a];
                Vec3 rel_a = pts.row(pa).transpose() - center_s;
                Eigen::Index b = nearest_in_patch(patch_set, pts, t, rel_a);
                Eigen::Index pb = patch_set.members[t][b];
                Vec3 rel_b = pts.row(pb).transpose() - center_t;
                if (mutual_only) {
                    Eigen::Index back = nearest_in_patch(patch_set, pts, s, rel_b);
                    if (back != static_cast<Eigen::Index>(a)) continue;
                }
                Eigen::Index na = patch_set.node_id(s, static_cast<Eigen::Index>(a));
                Eigen::Index nb = patch_set.node_id(t, b);
                if (na == nb) continue;
                auto key = std::minmax(na, nb);
                if (merged.count({key.first, key.second})) continue;
                CorrespondenceEdge edge;
                edge.a = key.first;
                edge.b = key.second;
                edge.g = features.row(pa) - features.row(pb);
                if (key.first != na) edge.g = -edge.g; // orient as f_a - f_b
                edge.d = (rel_a - rel_b).squaredNorm();
                merged.emplace(std::make_pair(key.first, key.second), std::move(edge));
            }
        }
    }
    edge_set.edges.reserve(merged.size());
    for (auto& [key, edge] : merged) edge_set.edges.push_back(std::move(edge));
    return edge_set;
}

GraphLaplacian build_laplacian(const EdgeSet& edge_set, const Eigen::MatrixXd& metric) {
    if (!edge_set.empty() && metric.rows() != edge_set.feature_dim()) {
        throw std::invalid_argument("build_laplacian: metric dimension does not match features");
    }
    if (metric.rows() != metric.cols() || !metric.allFinite()) {
        throw std::invalid_argument("build_laplacian: metric must be square and finite");
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edge_set.edges.size() * 4);
    for (const auto& e : edge_set.edges) {
        double w = std::exp(-e.g.dot(metric * e.g));
        triplets.emplace_back(e.a, e.a, w);
        triplets.emplace_back(e.b, e.b, w);
        triplets.emplace_back(e.a, e.b, -w);
        triplets.emplace_back(e.b, e.a, -w);
    }
    GraphLaplacian laplacian(edge_set.node_count, edge_set.node_count);
    laplacian.setFromTriplets(triplets.begin(), triplets.end());
    return laplacian;
}

} // namespace fgl
