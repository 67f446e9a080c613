#pragma once

#include "flucast/regressors/tree.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <vector>

namespace flucast {

/// Sorts (value, weight) pairs by value and returns the first value whose
/// cumulative weight reaches half the total.
template <class DV, class DW>
typename DV::Scalar weighted_median(const Eigen::MatrixBase<DV>& values, const Eigen::MatrixBase<DW>& weights)
{
    using Scalar = typename DV::Scalar;
    const Eigen::Index n = values.size();
    if (n == 0) {
        throw ValidationError("weighted_median: empty input");
    }
    if (weights.size() != n) {
        throw ValidationError("weighted_median: length mismatch");
    }
    if (!(weights.array() > Scalar(0)).all()) {
        throw ValidationError("weighted_median: weights must be positive");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
    const Scalar half = weights.sum() / Scalar(2);
    Scalar cumulative = 0;
    for (const auto k : order) {
        cumulative += weights(k);
        if (cumulative >= half) {
            return values(k);
        }
    }
    return values(order.back());
}

inline constexpr int kAdaBoostDefaultRounds = 50;
inline constexpr int kAdaBoostDefaultDepth = 3;

/// Learner weight given to a round whose tree fits the training data exactly.
inline const double kPerfectLearnerWeight = std::log(1e9);

template <typename Scalar>
struct AdaBoostFit {
    std::vector<RegressionTree<Scalar>> learners;
    std::vector<Scalar> learner_weights; // ln(1 / beta_t)
    std::vector<Scalar> round_losses;    // weighted average loss per kept round
    int max_depth = kAdaBoostDefaultDepth;
    int rounds_run = 0;
};

/// Sample weights each round was fitted with, plus the weights after the last
/// update. Filled only when requested.
template <typename Scalar>
struct AdaBoostTrace {
    std::vector<Eigen::VectorX<Scalar>> sample_weights;
};

/// AdaBoost.R2 with linear loss and weighted (not resampled) tree fitting.
///
/// Per round: fit a tree with the current weights, L_i = |f(x_i) - y_i| / max
/// error, average loss L = sum w_i L_i. A round with L >= 0.5 is dropped and
/// boosting stops, except that a first round is always kept so the committee
/// is never empty. beta = L / (1 - L); learner weight ln(1/beta); sample
/// weights scale by beta^(1 - L_i) and are renormalised. A tree with zero
/// training error is kept with weight ln(1e9) and ends boosting.
template <class DX, class DY>
AdaBoostFit<typename DX::Scalar> adaboost_r2_fit(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                                 int rounds, int max_depth,
                                                 AdaBoostTrace<typename DX::Scalar>* trace = nullptr)
{
    using Scalar = typename DX::Scalar;
    using Vec = Eigen::VectorX<Scalar>;
    const Eigen::Index n = X.rows();
    if (n < 2) {
        throw ValidationError("adaboost: need at least 2 rows");
    }
    if (rounds < 1) {
        throw ValidationError("adaboost: rounds must be >= 1");
    }
    if (y.size() != n) {
        throw ValidationError("adaboost: length mismatch");
    }

    AdaBoostFit<Scalar> fit;
    fit.max_depth = max_depth;
    Vec w = Vec::Constant(n, Scalar(1) / Scalar(n));
    Vec err(n);
    for (int t = 0; t < rounds; ++t) {
        if (trace) {
            trace->sample_weights.push_back(w);
        }
        RegressionTree<Scalar> tree = tree_fit(X, y, w, max_depth);
        for (Eigen::Index i = 0; i < n; ++i) {
            err(i) = std::abs(tree_predict(tree, X.row(i).transpose()) - y(i));
        }
        const Scalar max_err = err.maxCoeff();
        if (max_err == Scalar(0)) {
            fit.learners.push_back(std::move(tree));
            fit.learner_weights.push_back(Scalar(kPerfectLearnerWeight));
            fit.round_losses.push_back(Scalar(0));
            break;
        }
        const Vec loss = err / max_err;
        // plain sequential sums keep the arithmetic order fixed
        Scalar avg_loss = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            avg_loss += w(i) * loss(i);
        }
        if (avg_loss >= Scalar(0.5)) {
            if (fit.learners.empty()) {
                fit.learners.push_back(std::move(tree));
                fit.learner_weights.push_back(Scalar(1));
                fit.round_losses.push_back(avg_loss);
            }
            break;
        }
        const Scalar beta = avg_loss / (Scalar(1) - avg_loss);
        fit.learners.push_back(std::move(tree));
        fit.learner_weights.push_back(std::log(Scalar(1) / beta));
        fit.round_losses.push_back(avg_loss);
        Scalar total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i) *= std::pow(beta, Scalar(1) - loss(i));
            total += w(i);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i) /= total;
        }
    }
    if (trace) {
        trace->sample_weights.push_back(w);
    }
    fit.rounds_run = static_cast<int>(fit.learners.size());
    return fit;
}

template <typename Scalar, class Derived>
Scalar adaboost_predict(const AdaBoostFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& x)
{
    if (fit.learners.empty()) {
        throw ValidationError("adaboost_predict: empty committee");
    }
    const auto k = static_cast<Eigen::Index>(fit.learners.size());
    Eigen::VectorX<Scalar> preds(k);
    for (Eigen::Index t = 0; t < k; ++t) {
        preds(t) = tree_predict(fit.learners[static_cast<std::size_t>(t)], x);
    }
    const Eigen::Map<const Eigen::VectorX<Scalar>> weights(fit.learner_weights.data(), k);
    return weighted_median(preds, weights);
}

} // namespace flucast
