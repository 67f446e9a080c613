#pragma once

#include "flucast/regressors/scaling.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace flucast {

/// L1-penalised linear model. Coefficients and intercept are in the original
/// feature units; the penalty itself acts on standardized coefficients.
template <typename Scalar>
struct LassoFit {
    Eigen::VectorX<Scalar> coefficients;
    Scalar intercept = 0;
    Scalar lambda = 0;
    bool nonneg = false;
    FeatureScaler<Scalar> scaler;
    int sweeps = 0;
    bool converged = true;

    /// Coefficients on the standardized scale (what the solver iterates on).
    Eigen::VectorX<Scalar> standardized_coefficients() const
    {
        return coefficients.cwiseProduct(scaler.stdev);
    }
};

struct LassoOptions {
    double tolerance = 1e-8; // max standardized coefficient change per sweep
    int max_sweeps = 10'000;
};

inline constexpr int kLambdaPathLength = 50;
inline constexpr double kLambdaPathRatio = 1e-3;

namespace detail {

/// Centered/standardized problem in Gram form: G = Z'Z/n, c = Z'(y - ybar)/n.
template <typename Scalar>
struct LassoGram {
    FeatureScaler<Scalar> scaler;
    Scalar y_mean = 0;
    Eigen::MatrixX<Scalar> gram;
    Eigen::VectorX<Scalar> corr;

    template <class DX, class DY>
    LassoGram(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y)
    {
        const auto n = static_cast<Scalar>(X.rows());
        scaler = FeatureScaler<Scalar>::fit(X);
        const Eigen::MatrixX<Scalar> Z = scaler.transform(X);
        y_mean = y.mean();
        const Eigen::VectorX<Scalar> yc = y.array() - y_mean;
        gram.noalias() = Z.transpose() * Z / n;
        corr.noalias() = Z.transpose() * yc / n;
    }

    Scalar lambda_max() const { return corr.size() == 0 ? Scalar(0) : corr.cwiseAbs().maxCoeff(); }
};

template <class DX, class DY>
void check_lasso_inputs(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y)
{
    if (X.rows() != y.size()) {
        throw ValidationError("lasso: X rows and y length differ");
    }
    if (X.rows() < 2 || X.cols() < 1) {
        throw ValidationError("lasso: need at least 2 rows and 1 feature");
    }
    if (!all_finite(X) || !all_finite(y)) {
        throw ValidationError("lasso: non-finite input");
    }
}

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar lambda, bool nonneg)
{
    if (nonneg) {
        return std::max(z - lambda, Scalar(0));
    }
    if (z > lambda) {
        return z - lambda;
    }
    if (z < -lambda) {
        return z + lambda;
    }
    return 0;
}

/// With the active set and signs fixed the stationarity conditions are linear.
/// Moves `b` toward their solution, stopping at the first coefficient that
/// would change sign, dropping it and solving again. Returns false (with `b`
/// possibly moved, never to a worse objective) when a system has no solution.
template <typename Scalar>
bool lasso_active_set_solve(const LassoGram<Scalar>& g, Scalar lambda, std::vector<Eigen::Index> active,
                            Eigen::VectorX<Scalar>& b)
{
    using Vec = Eigen::VectorX<Scalar>;
    while (!active.empty()) {
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixX<Scalar> ga(na, na);
        Vec rhs(na);
        Vec ba(na);
        for (Eigen::Index u = 0; u < na; ++u) {
            ba(u) = b(active[u]);
            rhs(u) = g.corr(active[u]) - lambda * (ba(u) > Scalar(0) ? Scalar(1) : Scalar(-1));
            for (Eigen::Index v = 0; v < na; ++v) {
                ga(u, v) = g.gram(active[u], active[v]);
            }
        }
        const auto solves = [&](const Vec& x) {
            return x.allFinite() && (ga * x - rhs).norm() <= Scalar(1e-10) * (Scalar(1) + rhs.norm());
        };
        Vec x;
        const Eigen::LDLT<Eigen::MatrixX<Scalar>> ldlt(ga);
        if (ldlt.info() == Eigen::Success) {
            x = ldlt.solve(rhs);
        }
        if (x.size() == 0 || !solves(x)) {
            // rank deficient (more active columns than rows): minimum-norm solution
            x = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixX<Scalar>>(ga).solve(rhs);
            if (!x.allFinite()) {
                return false;
            }
            if (!solves(x)) {
                // Inconsistent: d = rhs - G x is in the null space of G and the
                // objective falls linearly along it until a coefficient hits zero.
                const Vec d = rhs - ga * x;
                Scalar step = std::numeric_limits<Scalar>::infinity();
                Eigen::Index blocking = -1;
                for (Eigen::Index u = 0; u < na; ++u) {
                    if ((ba(u) > Scalar(0) && d(u) < Scalar(0)) || (ba(u) < Scalar(0) && d(u) > Scalar(0))) {
                        const Scalar t = -ba(u) / d(u);
                        if (t < step) {
                            step = t;
                            blocking = u;
                        }
                    }
                }
                if (blocking < 0) {
                    return false;
                }
                for (Eigen::Index u = 0; u < na; ++u) {
                    b(active[u]) = u == blocking ? Scalar(0) : ba(u) + step * d(u);
                }
                active.erase(active.begin() + blocking);
                continue;
            }
        }
        Scalar step = 1;
        Eigen::Index blocking = -1;
        for (Eigen::Index u = 0; u < na; ++u) {
            const bool flips = ba(u) > Scalar(0) ? x(u) <= Scalar(0) : x(u) >= Scalar(0);
            if (flips) {
                const Scalar t = ba(u) / (ba(u) - x(u));
                if (t < step) {
                    step = t;
                    blocking = u;
                }
            }
        }
        if (blocking < 0) {
            for (Eigen::Index u = 0; u < na; ++u) {
                b(active[u]) = x(u);
            }
            return true;
        }
        for (Eigen::Index u = 0; u < na; ++u) {
            b(active[u]) = u == blocking ? Scalar(0) : ba(u) + step * (x(u) - ba(u));
        }
        active.erase(active.begin() + blocking);
    }
    return true;
}

/// Cyclic coordinate descent on the Gram form, starting from `b`. Each full
/// sweep that is not yet converged is followed by an exact solve on the
/// nonzero coordinates, or by sweeps over them alone when that solve is
/// singular. Convergence is declared only by a full sweep whose largest change
/// is below tolerance.
template <typename Scalar>
void lasso_coordinate_descent(const LassoGram<Scalar>& g, Scalar lambda, bool nonneg, const LassoOptions& opts,
                              Eigen::VectorX<Scalar>& b, int& sweeps, bool& converged)
{
    using Vec = Eigen::VectorX<Scalar>;
    const Eigen::Index p = g.corr.size();
    // residual correlation r = c - G b
    Vec r = g.corr - g.gram * b;
    std::vector<Eigen::Index> active;
    sweeps = 0;
    converged = false;
    while (sweeps < opts.max_sweeps) {
        ++sweeps;
        Scalar max_change = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const Scalar gjj = g.gram(j, j);
            if (g.scaler.is_constant(j) || gjj <= Scalar(0)) {
                continue;
            }
            const Scalar updated = soft_threshold(r(j) + gjj * b(j), lambda, nonneg) / gjj;
            const Scalar delta = updated - b(j);
            if (delta != Scalar(0)) {
                r.noalias() -= g.gram.col(j) * delta;
                b(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < Scalar(opts.tolerance)) {
            converged = true;
            break;
        }

        active.clear();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (b(j) != Scalar(0)) {
                active.push_back(j);
            }
        }
        if (active.empty()) {
            continue;
        }
        if (detail::lasso_active_set_solve(g, lambda, active, b)) {
            r = g.corr - g.gram * b;
            continue;
        }
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixX<Scalar> ga(na, na);
        Vec ra(na);
        Vec ba(na);
        for (Eigen::Index u = 0; u < na; ++u) {
            ra(u) = r(active[u]);
            ba(u) = b(active[u]);
            for (Eigen::Index v = 0; v < na; ++v) {
                ga(u, v) = g.gram(active[u], active[v]);
            }
        }
        while (sweeps < opts.max_sweeps) {
            ++sweeps;
            Scalar active_change = 0;
            for (Eigen::Index u = 0; u < na; ++u) {
                const Scalar guu = ga(u, u);
                const Scalar updated = soft_threshold(ra(u) + guu * ba(u), lambda, nonneg) / guu;
                const Scalar delta = updated - ba(u);
                if (delta != Scalar(0)) {
                    ra.noalias() -= ga.col(u) * delta;
                    ba(u) = updated;
                    active_change = std::max(active_change, std::abs(delta));
                }
            }
            if (active_change < Scalar(opts.tolerance)) {
                break;
            }
        }
        for (Eigen::Index u = 0; u < na; ++u) {
            b(active[u]) = ba(u);
        }
        r = g.corr - g.gram * b;
    }
}

template <typename Scalar>
LassoFit<Scalar> assemble_lasso_fit(const LassoGram<Scalar>& g, const Eigen::VectorX<Scalar>& b, Scalar lambda,
                                    bool nonneg, int sweeps, bool converged)
{
    LassoFit<Scalar> fit;
    fit.scaler = g.scaler;
    fit.lambda = lambda;
    fit.nonneg = nonneg;
    fit.sweeps = sweeps;
    fit.converged = converged;
    fit.coefficients.resize(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        fit.coefficients(j) = g.scaler.is_constant(j) ? Scalar(0) : b(j) / g.scaler.stdev(j);
    }
    fit.intercept = g.y_mean - fit.coefficients.dot(g.scaler.mean);
    return fit;
}

} // namespace detail

/// Minimises (1/2n)||y - b0 - Xb||^2 + lambda * sum|b_j| over standardized
/// features (b >= 0 when `nonneg`), with an unpenalised intercept.
template <class DX, class DY>
LassoFit<typename DX::Scalar> lasso_cd_fit(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                           typename DX::Scalar lambda, bool nonneg, const LassoOptions& opts = {})
{
    using Scalar = typename DX::Scalar;
    detail::check_lasso_inputs(X, y);
    if (!(lambda >= Scalar(0)) || !std::isfinite(lambda)) {
        throw ValidationError("lasso: lambda must be finite and >= 0");
    }
    const detail::LassoGram<Scalar> g(X, y);
    Eigen::VectorX<Scalar> b = Eigen::VectorX<Scalar>::Zero(X.cols());
    int sweeps = 0;
    bool converged = false;
    detail::lasso_coordinate_descent(g, lambda, nonneg, opts, b, sweeps, converged);
    return detail::assemble_lasso_fit<Scalar>(g, b, lambda, nonneg, sweeps, converged);
}

/// Fits a descending lambda sequence, warm-starting each from the previous.
template <class DX, class DY>
std::vector<LassoFit<typename DX::Scalar>> lasso_path_fit(const Eigen::MatrixBase<DX>& X,
                                                          const Eigen::MatrixBase<DY>& y,
                                                          const std::vector<typename DX::Scalar>& lambdas,
                                                          bool nonneg, const LassoOptions& opts = {})
{
    using Scalar = typename DX::Scalar;
    detail::check_lasso_inputs(X, y);
    const detail::LassoGram<Scalar> g(X, y);
    Eigen::VectorX<Scalar> b = Eigen::VectorX<Scalar>::Zero(X.cols());
    std::vector<LassoFit<Scalar>> fits;
    fits.reserve(lambdas.size());
    for (const Scalar lambda : lambdas) {
        int sweeps = 0;
        bool converged = false;
        detail::lasso_coordinate_descent(g, lambda, nonneg, opts, b, sweeps, converged);
        fits.push_back(detail::assemble_lasso_fit<Scalar>(g, b, lambda, nonneg, sweeps, converged));
    }
    return fits;
}

/// max_j |<z_j, y - ybar>| / n on standardized columns.
template <class DX, class DY>
typename DX::Scalar lasso_lambda_max(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y)
{
    detail::check_lasso_inputs(X, y);
    return detail::LassoGram<typename DX::Scalar>(X, y).lambda_max();
}

/// 50 values, geometric from lambda_max down to 1e-3 * lambda_max.
template <class DX, class DY>
std::vector<typename DX::Scalar> lasso_lambda_path(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y)
{
    using Scalar = typename DX::Scalar;
    const Scalar lmax = lasso_lambda_max(X, y);
    std::vector<Scalar> path(kLambdaPathLength);
    for (int k = 0; k < kLambdaPathLength; ++k) {
        const Scalar frac = Scalar(k) / Scalar(kLambdaPathLength - 1);
        path[k] = k == 0 ? lmax : lmax * std::pow(Scalar(kLambdaPathRatio), frac);
    }
    return path;
}

template <typename Scalar, class Derived>
Scalar lasso_predict(const LassoFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& x)
{
    if (x.size() != fit.coefficients.size()) {
        throw ValidationError("lasso_predict: dimension mismatch");
    }
    return fit.intercept + fit.coefficients.dot(x.derived().template cast<Scalar>());
}

template <typename Scalar, class Derived>
Eigen::VectorX<Scalar> lasso_predict_rows(const LassoFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& X)
{
    if (X.cols() != fit.coefficients.size()) {
        throw ValidationError("lasso_predict: dimension mismatch");
    }
    return (X * fit.coefficients).array() + fit.intercept;
}

} // namespace flucast
