#pragma once

#include "flucast/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace flucast {

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

/// A node is a leaf when `feature < 0`. Splits send x[feature] <= threshold to
/// `left`, everything else to `right`.
template <typename Scalar>
struct TreeNode {
    int feature = -1;
    Scalar threshold = 0;
    int left = -1;
    int right = -1;
    Scalar prediction = 0; // weighted mean of the node's training targets
    Scalar weight = 0;     // total training weight reaching the node

    bool is_leaf() const { return feature < 0; }
};

/// CART regression tree stored flat; node 0 is the root.
template <typename Scalar>
struct RegressionTree {
    std::vector<TreeNode<Scalar>> nodes;

    std::size_t leaf_count() const
    {
        return std::count_if(nodes.begin(), nodes.end(), [](const auto& nd) { return nd.is_leaf(); });
    }

    int depth() const { return depth_from(0); }

private:
    int depth_from(int k) const
    {
        const auto& nd = nodes[k];
        return nd.is_leaf() ? 0 : 1 + std::max(depth_from(nd.left), depth_from(nd.right));
    }
};

namespace detail {

// Weighted running mean / sum of squared deviations (West's update).
template <typename Scalar>
struct WeightedMoments {
    Scalar weight = 0;
    Scalar mean = 0;
    Scalar sse = 0;

    void add(Scalar w, Scalar y)
    {
        if (w <= Scalar(0)) {
            return;
        }
        if (weight == Scalar(0)) {
            weight = w;
            mean = y; // exact, so pure leaves reproduce their targets
            return;
        }
        weight += w;
        const Scalar delta = y - mean;
        mean += delta * w / weight;
        sse += w * delta * (y - mean);
    }
};

template <typename Scalar, class DX, class DY, class DW>
class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DW>& w,
                int max_depth)
        : X_(X.derived()), y_(y.derived()), w_(w.derived()), max_depth_(max_depth)
    {
    }

    RegressionTree<Scalar> build()
    {
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(X_.rows()));
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        Scalar threshold = 0;
        Scalar sse = std::numeric_limits<Scalar>::infinity();
    };

    int grow(const std::vector<Eigen::Index>& rows, int depth)
    {
        Scalar sum_w = 0;
        WeightedMoments<Scalar> all;
        for (const auto r : rows) {
            sum_w += w_(r);
            all.add(w_(r), y_(r));
        }
        const int index = static_cast<int>(tree_.nodes.size());
        TreeNode<Scalar> node;
        node.weight = sum_w;
        node.prediction = all.weight > Scalar(0) ? all.mean : Scalar(0);
        tree_.nodes.push_back(node);

        if (depth >= max_depth_ || !has_distinct_rows(rows) || all.sse <= Scalar(0)) {
            return index;
        }
        const Split best = best_split(rows);
        if (best.feature < 0 || !(best.sse < all.sse * (Scalar(1) - Scalar(1e-12)))) {
            return index;
        }
        std::vector<Eigen::Index> left;
        std::vector<Eigen::Index> right;
        for (const auto r : rows) {
            (X_(r, best.feature) <= best.threshold ? left : right).push_back(r);
        }
        const int l = grow(left, depth + 1);
        const int rr = grow(right, depth + 1);
        auto& nd = tree_.nodes[static_cast<std::size_t>(index)];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.left = l;
        nd.right = rr;
        return index;
    }

    bool has_distinct_rows(const std::vector<Eigen::Index>& rows) const
    {
        for (std::size_t k = 1; k < rows.size(); ++k) {
            if ((X_.row(rows[k]).array() != X_.row(rows[0]).array()).any()) {
                return true;
            }
        }
        return false;
    }

    Split best_split(const std::vector<Eigen::Index>& rows) const
    {
        Split best;
        const std::size_t m = rows.size();
        std::vector<Eigen::Index> order;
        std::vector<Scalar> suffix_sse(m + 1);
        std::vector<Scalar> suffix_w(m + 1);
        for (Eigen::Index f = 0; f < X_.cols(); ++f) {
            order = rows;
            std::stable_sort(order.begin(), order.end(),
                             [&](Eigen::Index a, Eigen::Index b) { return X_(a, f) < X_(b, f); });
            WeightedMoments<Scalar> right;
            suffix_sse[m] = 0;
            suffix_w[m] = 0;
            for (std::size_t k = m; k-- > 0;) {
                right.add(w_(order[k]), y_(order[k]));
                suffix_sse[k] = right.sse;
                suffix_w[k] = right.weight;
            }
            WeightedMoments<Scalar> left;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                left.add(w_(order[k]), y_(order[k]));
                const Scalar lo = X_(order[k], f);
                const Scalar hi = X_(order[k + 1], f);
                if (!(lo < hi) || left.weight <= Scalar(0) || suffix_w[k + 1] <= Scalar(0)) {
                    continue;
                }
                const Scalar total = left.sse + suffix_sse[k + 1];
                if (total < best.sse) {
                    Scalar threshold = lo + (hi - lo) / Scalar(2);
                    if (!(threshold < hi)) {
                        threshold = lo;
                    }
                    best = {static_cast<int>(f), threshold, total};
                }
            }
        }
        return best;
    }

    const DX& X_;
    const DY& y_;
    const DW& w_;
    int max_depth_;
    RegressionTree<Scalar> tree_;
};

} // namespace detail

/// Weighted CART. Each node takes the (feature, midpoint threshold) with the
/// smallest total weighted SSE of its children; ties go to the lower feature
/// index, then the lower threshold. Growth stops at `max_depth`, at nodes
/// without two distinct input rows, or when no split lowers the SSE.
template <class DX, class DY, class DW>
RegressionTree<typename DX::Scalar> tree_fit(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                             const Eigen::MatrixBase<DW>& weights, int max_depth)
{
    using Scalar = typename DX::Scalar;
    if (X.rows() != y.size() || y.size() != weights.size()) {
        throw ValidationError("tree_fit: length mismatch");
    }
    if (X.rows() == 0) {
        throw ValidationError("tree_fit: empty training set");
    }
    if (max_depth < 0) {
        throw ValidationError("tree_fit: max_depth must be >= 0");
    }
    if ((weights.array() < Scalar(0)).any()) {
        throw ValidationError("tree_fit: negative weight");
    }
    if (!(weights.sum() > Scalar(0))) {
        throw ValidationError("tree_fit: total weight must be positive");
    }
    return detail::TreeBuilder<Scalar, DX, DY, DW>(X, y, weights, max_depth).build();
}

template <typename Scalar, class Derived>
Scalar tree_predict(const RegressionTree<Scalar>& tree, const Eigen::MatrixBase<Derived>& x)
{
    int k = 0;
    while (true) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(k)];
        if (nd.is_leaf()) {
            return nd.prediction;
        }
        if (nd.feature >= x.size()) {
            throw ValidationError("tree_predict: feature index out of range");
        }
        k = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
}

} // namespace flucast
