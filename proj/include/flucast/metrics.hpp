#pragma once

#include "flucast/backtest.hpp"
#include "flucast/errors.hpp"
#include "flucast/vintage.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace flucast {

namespace detail {

template <class DY, class DX>
void check_pair(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x, Eigen::Index min_n, const char* what)
{
    if (y.size() != x.size()) {
        throw ValidationError(std::string(what) + ": length mismatch");
    }
    if (y.size() < min_n) {
        throw ValidationError(std::string(what) + ": need at least " + std::to_string(min_n) + " values");
    }
}

template <class DY>
void check_nonzero(const Eigen::MatrixBase<DY>& y, const char* what)
{
    if ((y.array() == typename DY::Scalar(0)).any()) {
        throw ValidationError(std::string(what) + ": observed value of 0");
    }
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace detail

/// Pearson correlation of observed y and predicted x.
template <class DY, class DX>
double pearson(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 2, "pearson");
    const auto yc = (y.array() - y.mean()).eval();
    const auto xc = (x.array() - x.mean()).eval();
    const double syy = yc.square().sum();
    const double sxx = xc.square().sum();
    if (!(syy > 0.0) || !(sxx > 0.0)) {
        throw ValidationError("pearson: constant input");
    }
    const double r = (yc * xc).sum() / (std::sqrt(syy) * std::sqrt(sxx));
    return std::clamp(r, -1.0, 1.0);
}

template <class DY, class DX>
double rmse(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 1, "rmse");
    return std::sqrt((y - x).squaredNorm() / static_cast<double>(y.size()));
}

/// Root mean squared relative error, in percent.
template <class DY, class DX>
double rmspe(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 1, "rmspe");
    detail::check_nonzero(y, "rmspe");
    return std::sqrt(((y - x).array() / y.array()).square().sum() / static_cast<double>(y.size())) * 100.0;
}

/// Worst absolute relative error, in percent (a maximum, not a mean).
template <class DY, class DX>
double mape_max(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 1, "mape_max");
    detail::check_nonzero(y, "mape_max");
    return ((y - x).array() / y.array()).abs().maxCoeff() * 100.0;
}

/// Mean absolute relative error, in percent. Not one of the headline metrics.
template <class DY, class DX>
double mean_ape(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 1, "mean_ape");
    detail::check_nonzero(y, "mean_ape");
    return ((y - x).array() / y.array()).abs().mean() * 100.0;
}

/// Share of week-over-week steps whose direction agrees, in percent.
/// sign(0) = 0, and only exact sign equality counts.
template <class DY, class DX>
double hit_rate(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x)
{
    detail::check_pair(y, x, 2, "hit_rate");
    Eigen::Index hits = 0;
    for (Eigen::Index i = 1; i < y.size(); ++i) {
        hits += detail::sign(y(i) - y(i - 1)) == detail::sign(x(i) - x(i - 1));
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(y.size() - 1);
}

inline constexpr std::size_t kMetricCount = 5;
inline constexpr std::array<const char*, kMetricCount> kMetricNames{"corr", "rmse", "rmspe", "mape_max", "hit_rate"};

/// One (horizon, model) line. A metric that is undefined on the evaluated
/// weeks (constant series, zero observation) is NaN.
struct MetricRow {
    int horizon = 0;
    std::string model;
    std::array<double, kMetricCount> values{};
    double mean_ape = 0.0;
    std::size_t n = 0;
    std::array<bool, kMetricCount> best{};
};

struct RelativeErrorPoint {
    int horizon = 0;
    std::string model;
    EpiWeek target_week;
    double observed = 0.0;
    double predicted = 0.0;
    double relative_error = 0.0; // |y - x| / y, only where y > 0
};

struct EvaluationReport {
    std::vector<MetricRow> rows;             // by (horizon, model)
    std::vector<RelativeErrorPoint> errors;  // by (horizon, model, target week)
};

/// Scores every (horizon, model) in `records` whose target week is in
/// [start, end] against `cdc_final`. At each horizon only target weeks that
/// every model predicted (and that have an observation) are used.
/// Throws ValidationError if no horizon has a common week.
EvaluationReport evaluate_ledger(const std::vector<PredictionRecord>& records, const Snapshot& cdc_final, EpiWeek start,
                                 EpiWeek end);

} // namespace flucast
