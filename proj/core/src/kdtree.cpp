#include "toma/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace toma {

namespace {
constexpr int kLeafSize = 8;
}

KdTree::KdTree(Eigen::MatrixXd points) : points_(std::move(points)) {
    order_.resize(points_.cols());
    std::iota(order_.begin(), order_.end(), 0);
    if (!order_.empty()) root_ = build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    // Axis of maximum spread over this range.
    Eigen::VectorXd lo = points_.col(order_[begin]), hi = lo;
    for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_.col(order_[i]));
        hi = hi.cwiseMax(points_.col(order_[i]));
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_(axis, a) < points_(axis, b); });
    const double split = points_(axis, order_[mid]);

    nodes_[id].axis = axis;
    nodes_[id].split = split;
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::consider(int point, const Eigen::VectorXd& q, const std::vector<char>* alive,
                      Hit& best) const {
    if (alive && !(*alive)[point]) return;
    const double d2 = (points_.col(point) - q).squaredNorm();
    if (best.index < 0 || d2 < best.distance || (d2 == best.distance && point < best.index)) {
        best.index = point;
        best.distance = d2;
    }
}

void KdTree::search(int node, const Eigen::VectorXd& q, const std::vector<char>* alive,
                    Hit& best) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (int i = n.begin; i < n.end; ++i) consider(order_[i], q, alive, best);
        return;
    }
    const double diff = q[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, q, alive, best);
    // An equally distant point with a lower index may sit exactly on the
    // boundary, so only prune when the slab is strictly farther.
    if (best.index < 0 || diff * diff <= best.distance) search(far, q, alive, best);
}

KdTree::Hit KdTree::nearest(const Eigen::VectorXd& q, const std::vector<char>* alive) const {
    Hit best;
    if (root_ < 0) return best;
    search(root_, q, alive, best);
    if (best.index >= 0) best.distance = std::sqrt(best.distance);
    return best;
}

}  // namespace toma
