#pragma once

#include "flucast/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace flucast {

inline constexpr int kDefaultCvFolds = 5;

/// Contiguous, time-ordered folds over a fixed hyperparameter grid.
template <class Params>
struct CvPlan {
    int n_folds = kDefaultCvFolds;
    std::vector<Params> grid;
};

template <class Params>
struct CvResult {
    Params best;
    std::size_t best_index = 0;
    std::vector<double> cv_rmse; // mean validation RMSE, one per grid entry
};

/// [begin, end) row ranges. The first n % k blocks carry one extra row.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> contiguous_folds(Eigen::Index n, int k)
{
    std::vector<std::pair<Eigen::Index, Eigen::Index>> folds;
    folds.reserve(static_cast<std::size_t>(k));
    const Eigen::Index base = n / k;
    const Eigen::Index extra = n % k;
    Eigen::Index begin = 0;
    for (int f = 0; f < k; ++f) {
        const Eigen::Index len = base + (f < extra ? 1 : 0);
        folds.emplace_back(begin, begin + len);
        begin += len;
    }
    return folds;
}

namespace detail {

template <class DX>
Eigen::MatrixX<typename DX::Scalar> drop_rows(const Eigen::MatrixBase<DX>& X, Eigen::Index begin, Eigen::Index end)
{
    Eigen::MatrixX<typename DX::Scalar> out(X.rows() - (end - begin), X.cols());
    out.topRows(begin) = X.topRows(begin);
    out.bottomRows(X.rows() - end) = X.bottomRows(X.rows() - end);
    return out;
}

} // namespace detail

/// Grid search where one call fits every grid entry on a training block and
/// returns validation predictions as columns (lets path solvers warm-start).
///
/// `fit_predict_grid(X_train, y_train, grid, X_val) -> Matrix (n_val x grid)`.
/// A non-finite column marks a grid entry that failed on that fold. Ties keep
/// the earliest grid entry.
template <class DX, class DY, class Params, class FitPredictGrid>
CvResult<Params> cv_select_grid(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                const CvPlan<Params>& plan, FitPredictGrid&& fit_predict_grid)
{
    using Scalar = typename DX::Scalar;
    if (plan.grid.empty()) {
        throw ValidationError("cv_select: empty grid");
    }
    if (plan.n_folds < 2) {
        throw ValidationError("cv_select: need at least 2 folds");
    }
    if (X.rows() != y.size()) {
        throw ValidationError("cv_select: X rows and y length differ");
    }
    if (X.rows() < 2 * static_cast<Eigen::Index>(plan.n_folds)) {
        throw InsufficientData("cv_select: need at least " + std::to_string(2 * plan.n_folds) + " rows, have " +
                               std::to_string(X.rows()));
    }
    const std::size_t g = plan.grid.size();
    std::vector<double> total(g, 0.0);
    for (const auto& [begin, end] : contiguous_folds(X.rows(), plan.n_folds)) {
        const Eigen::MatrixX<Scalar> X_train = detail::drop_rows(X, begin, end);
        const Eigen::VectorX<Scalar> y_train = detail::drop_rows(y, begin, end);
        const Eigen::MatrixX<Scalar> X_val = X.middleRows(begin, end - begin);
        const Eigen::VectorX<Scalar> y_val = y.segment(begin, end - begin);
        const Eigen::MatrixX<Scalar> preds =
            fit_predict_grid(X_train, y_train, std::span<const Params>(plan.grid), X_val);
        for (std::size_t k = 0; k < g; ++k) {
            const auto col = preds.col(static_cast<Eigen::Index>(k));
            const double mse = (col - y_val).squaredNorm() / static_cast<double>(y_val.size());
            total[k] += std::isfinite(mse) ? std::sqrt(mse) : std::numeric_limits<double>::infinity();
        }
    }
    CvResult<Params> result;
    result.cv_rmse.resize(g);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g; ++k) {
        result.cv_rmse[k] = total[k] / plan.n_folds;
        if (result.cv_rmse[k] < best) {
            best = result.cv_rmse[k];
            result.best_index = k;
        }
    }
    if (!std::isfinite(best)) {
        throw NonConvergence("cv_select: every grid entry failed");
    }
    result.best = plan.grid[result.best_index];
    return result;
}

/// Per-entry variant: `fit_predict(X_train, y_train, params, X_val) -> Vector`.
/// An entry whose fit throws NonConvergence scores +inf on that fold.
template <class DX, class DY, class Params, class FitPredict>
CvResult<Params> cv_select(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y, const CvPlan<Params>& plan,
                           FitPredict&& fit_predict)
{
    using Scalar = typename DX::Scalar;
    return cv_select_grid(X, y, plan,
                          [&](const Eigen::MatrixX<Scalar>& Xt, const Eigen::VectorX<Scalar>& yt,
                              std::span<const Params> grid, const Eigen::MatrixX<Scalar>& Xv) {
                              Eigen::MatrixX<Scalar> out(Xv.rows(), static_cast<Eigen::Index>(grid.size()));
                              for (std::size_t k = 0; k < grid.size(); ++k) {
                                  try {
                                      out.col(static_cast<Eigen::Index>(k)) = fit_predict(Xt, yt, grid[k], Xv);
                                  } catch (const NonConvergence&) {
                                      out.col(static_cast<Eigen::Index>(k)).setConstant(
                                          std::numeric_limits<Scalar>::quiet_NaN());
                                  }
                              }
                              return out;
                          });
}

} // namespace flucast
