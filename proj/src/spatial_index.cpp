#include "fgl/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace fgl {

namespace {

// Candidate ordering: smaller squared distance first, index breaks ties.
struct Candidate {
    double d2;
    Eigen::Index idx;
    bool operator<(const Candidate& o) const {
        return d2 < o.d2 || (d2 == o.d2 && idx < o.idx);
    }
};

} // namespace

SpatialIndex::SpatialIndex(const PointMatrix& points) : points_(points) {
    if (points_.rows() < 1) {
        throw std::invalid_argument("SpatialIndex requires at least one point");
    }
    ids_.resize(points_.rows());
    std::iota(ids_.begin(), ids_.end(), Eigen::Index{0});
    nodes_.reserve(2 * points_.rows() / kLeafSize + 2);
    root_ = build(0, points_.rows());
    // Reorder the stored points to match ids_ so leaves are contiguous.
    PointMatrix reordered(points_.rows(), 3);
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
        reordered.row(i) = points.row(ids_[i]);
    }
    points_ = std::move(reordered);
}

int32_t SpatialIndex::build(Eigen::Index begin, Eigen::Index end) {
    Node node;
    if (end - begin <= kLeafSize) {
        node.begin = begin;
        node.end = end;
        nodes_.push_back(node);
        return static_cast<int32_t>(nodes_.size() - 1);
    }
    // Split on the widest axis at the median.
    Vec3 lo = points_.row(ids_[begin]);
    Vec3 hi = lo;
    for (Eigen::Index i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_.row(ids_[i]).transpose());
        hi = hi.cwiseMax(points_.row(ids_[i]).transpose());
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                         double pa = points_(a, axis), pb = points_(b, axis);
                         return pa < pb || (pa == pb && a < b);
                     });
    node.axis = axis;
    node.split = points_(ids_[mid], axis);
    nodes_.push_back(node);
    auto id = static_cast<int32_t>(nodes_.size() - 1);
    nodes_[id].left = build(begin, mid);
    nodes_[id].right = build(mid, end);
    return id;
}

std::vector<Eigen::Index> SpatialIndex::knn(const Vec3& query, Eigen::Index k) const {
    if (k < 1 || k > points_.rows()) {
        throw std::invalid_argument("knn: k must satisfy 1 <= k <= N");
    }
    // Max-heap of the current best k; top is the worst kept candidate.
    std::priority_queue<Candidate> heap;

    auto visit = [&](auto&& self, int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (Eigen::Index i = node.begin; i < node.end; ++i) {
                Candidate c{(points_.row(i).transpose() - query).squaredNorm(), ids_[i]};
                if (static_cast<Eigen::Index>(heap.size()) < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        double delta = query[node.axis] - node.split;
        int32_t near = delta < 0 ? node.left : node.right;
        int32_t far = delta < 0 ? node.right : node.left;
        self(self, near);
        // The far side may still hold equal-distance points with smaller
        // indices, so prune only on strict inequality.
        if (static_cast<Eigen::Index>(heap.size()) < k || delta * delta <= heap.top().d2) {
            self(self, far);
        }
    };
    visit(visit, root_);

    std::vector<Candidate> sorted;
    sorted.reserve(heap.size());
    while (!heap.empty()) {
        sorted.push_back(heap.top());
        heap.pop();
    }
    std::sort(sorted.begin(), sorted.end());
    std::vector<Eigen::Index> result(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) result[i] = sorted[i].idx;
    return result;
}

Eigen::Index SpatialIndex::nearest(const Vec3& query) const { return knn(query, 1)[0]; }

} // namespace fgl
