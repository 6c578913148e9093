#pragma once

#include <Eigen/Core>
#include <vector>

namespace toma {

// Exact nearest-neighbor tree over a fixed point set (one point per column).
// Splits on the axis of maximum spread at the median. Queries break distance
// ties toward the lowest point index, so results match a linear scan that
// keeps the first minimum.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(Eigen::MatrixXd points);

    int size() const { return static_cast<int>(points_.cols()); }
    int dim() const { return static_cast<int>(points_.rows()); }
    const Eigen::MatrixXd& points() const { return points_; }

    struct Hit {
        int index = -1;
        double distance = 0.0;
    };

    // Nearest point to q; `alive` (if non-null, size() entries) masks points
    // out of consideration. Returns index -1 when nothing is eligible.
    Hit nearest(const Eigen::VectorXd& q, const std::vector<char>* alive = nullptr) const;

private:
    struct Node {
        int axis = -1;        // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf: range in order_
    };

    int build(int begin, int end);
    void search(int node, const Eigen::VectorXd& q, const std::vector<char>* alive, Hit& best) const;
    void consider(int point, const Eigen::VectorXd& q, const std::vector<char>* alive,
                  Hit& best) const;

    Eigen::MatrixXd points_;
    std::vector<int> order_;  // point indices, partitioned by the tree
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace toma
