#pragma once

#include "flucast/regressors/scaling.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace flucast {

enum class Kernel { linear, rbf };

template <class DX, class DZ>
typename DX::Scalar kernel_eval(Kernel kernel, typename DX::Scalar gamma, const Eigen::MatrixBase<DX>& x,
                                const Eigen::MatrixBase<DZ>& z)
{
    using Scalar = typename DX::Scalar;
    if (x.size() != z.size()) {
        throw ValidationError("kernel_eval: dimension mismatch");
    }
    if (kernel == Kernel::linear) {
        return x.derived().cwiseProduct(z.derived()).sum();
    }
    if (!(gamma > Scalar(0))) {
        throw ValidationError("kernel_eval: rbf gamma must be > 0");
    }
    return std::exp(-gamma * (x.derived() - z.derived()).squaredNorm());
}

template <typename Scalar>
struct SvrParams {
    Scalar C = 1;
    Scalar epsilon = Scalar(0.1);
    Kernel kernel = Kernel::rbf;
    Scalar gamma = 1; // rbf only
};

/// Both pick i as the maximal violator; first_order pairs it with the
/// minimal one, second_order with the partner of largest objective decrease.
enum class WorkingSet { first_order, second_order };

struct SvrOptions {
    double tolerance = 1e-3;      // max KKT violation (maximal violating pair gap)
    long max_iterations = 10'000'000; // pair updates
    double failure_violation = 1e-1;
    WorkingSet working_set = WorkingSet::second_order;
};

/// Epsilon-SVR solution. `dual_coeffs(i)` is alpha_i - alpha*_i for training
/// row i; `support_inputs` holds the standardized training rows.
template <typename Scalar>
struct SvrFit {
    Eigen::VectorX<Scalar> dual_coeffs;
    Eigen::VectorX<Scalar> alpha; // [alpha; alpha*], reusable as a warm start
    Scalar bias = 0;
    Kernel kernel = Kernel::rbf;
    Scalar gamma = 1;
    Scalar C = 1;
    Scalar epsilon = 0;
    Eigen::MatrixX<Scalar> support_inputs;
    FeatureScaler<Scalar> scaler;
    long iterations = 0;
    Scalar kkt_violation = 0;
    bool converged = false;
};

namespace detail {

template <typename Scalar>
Eigen::MatrixX<Scalar> kernel_matrix(Kernel kernel, Scalar gamma, const Eigen::MatrixX<Scalar>& Z)
{
    const Eigen::Index n = Z.rows();
    Eigen::MatrixX<Scalar> K(n, n);
    K.noalias() = Z * Z.transpose();
    if (kernel == Kernel::rbf) {
        const Eigen::VectorX<Scalar> sq = Z.rowwise().squaredNorm();
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const Scalar d2 = std::max(Scalar(0), sq(i) + sq(j) - Scalar(2) * K(i, j));
                K(i, j) = i == j ? Scalar(1) : std::exp(-gamma * d2);
            }
        }
    }
    return K;
}

/// K(i, j) = k(A_i, B_j) for rows of A and B.
template <typename Scalar>
Eigen::MatrixX<Scalar> cross_kernel(Kernel kernel, Scalar gamma, const Eigen::MatrixX<Scalar>& A,
                                    const Eigen::MatrixX<Scalar>& B)
{
    Eigen::MatrixX<Scalar> K(A.rows(), B.rows());
    K.noalias() = A * B.transpose();
    if (kernel == Kernel::rbf) {
        const Eigen::VectorX<Scalar> sa = A.rowwise().squaredNorm();
        const Eigen::VectorX<Scalar> sb = B.rowwise().squaredNorm();
        for (Eigen::Index j = 0; j < K.cols(); ++j) {
            for (Eigen::Index i = 0; i < K.rows(); ++i) {
                K(i, j) = std::exp(-gamma * std::max(Scalar(0), sa(i) + sb(j) - Scalar(2) * K(i, j)));
            }
        }
    }
    return K;
}

template <typename Scalar>
void check_svr_params(const SvrParams<Scalar>& p)
{
    if (!(p.C > Scalar(0)) || !std::isfinite(p.C)) {
        throw ValidationError("svr: C must be finite and > 0");
    }
    if (!(p.epsilon >= Scalar(0)) || !std::isfinite(p.epsilon)) {
        throw ValidationError("svr: epsilon must be finite and >= 0");
    }
    if (p.kernel == Kernel::rbf && (!(p.gamma > Scalar(0)) || !std::isfinite(p.gamma))) {
        throw ValidationError("svr: rbf gamma must be finite and > 0");
    }
}

} // namespace detail

/// Dual solution on a precomputed kernel matrix.
template <typename Scalar>
struct SvrDual {
    Eigen::VectorX<Scalar> coeffs; // alpha - alpha*
    Eigen::VectorX<Scalar> alpha;  // [alpha; alpha*]
    Scalar bias = 0;
    long iterations = 0;
    Scalar kkt_violation = 0;
    bool converged = false;
};

/// Solves the epsilon-SVR dual with SMO: the 2n box-constrained variables
/// (alpha, alpha*) are updated in pairs led by the maximal violator. The stop
/// test is always the maximal violating pair gap over all variables.
///
/// `warm_alpha` ([alpha; alpha*]) must lie in the box and keep
/// sum(alpha - alpha*) = 0; a solution for a smaller C scaled by the C ratio
/// qualifies.
///
/// Throws NonConvergence when the iteration cap is hit with a violation above
/// `opts.failure_violation`; smaller leftover violations are kept on the result.
template <typename Scalar, class DY>
SvrDual<Scalar> svr_solve_dual(const Eigen::MatrixX<Scalar>& K, const Eigen::MatrixBase<DY>& y, Scalar C,
                               Scalar epsilon, const SvrOptions& opts = {},
                               const Eigen::VectorX<Scalar>* warm_alpha = nullptr)
{
    using Vec = Eigen::VectorX<Scalar>;
    using Index = Eigen::Index;
    const Index n = K.rows();
    if (K.cols() != n || y.size() != n) {
        throw ValidationError("svr: kernel and target sizes differ");
    }

    Vec a = Vec::Zero(n);  // alpha
    Vec as = Vec::Zero(n); // alpha*
    if (warm_alpha != nullptr) {
        if (warm_alpha->size() != 2 * n || (warm_alpha->array() < Scalar(0)).any() ||
            (warm_alpha->array() > C).any()) {
            throw ValidationError("svr: warm start outside the box");
        }
        a = warm_alpha->head(n);
        as = warm_alpha->tail(n);
        const Scalar net = a.sum() - as.sum();
        if (std::abs(net) > Scalar(1e-9) * (Scalar(1) + C * Scalar(n))) {
            throw ValidationError("svr: warm start violates sum(alpha - alpha*) = 0");
        }
    }

    // With F = K (alpha - alpha*) and R = y - F, the scaled negative gradient
    // of alpha_r is R_r - eps and that of alpha*_r is R_r + eps. alpha_r may
    // move up while below C and down while above 0; alpha*_r the reverse.
    const Vec yv = y.derived().template cast<Scalar>();
    Vec R(n);
    const auto rebuild_residual = [&] { R.noalias() = yv - K * (a - as); };
    rebuild_residual();
    const Vec diag = K.diagonal();
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();

    // Rows whose two variables are both pinned where no pair can use them
    // are periodically dropped from the scans and residual updates.
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) {
        all[static_cast<std::size_t>(r)] = r;
    }
    std::vector<Index> active = all;
    bool unshrunk = false;

    // variable index t: t < n is alpha_t, t >= n is alpha*_{t-n}
    Scalar gmax = 0;
    Scalar gmin = 0;
    Index i = -1;
    Index j = -1;
    const auto scan = [&] {
        gmax = -inf;
        gmin = inf;
        i = -1;
        j = -1;
        for (const Index r : active) {
            const Scalar v = R(r) - epsilon;
            if (a(r) < C && v > gmax) {
                gmax = v;
                i = r;
            }
            if (a(r) > Scalar(0) && v < gmin) {
                gmin = v;
                j = r;
            }
        }
        for (const Index r : active) {
            const Scalar v = R(r) + epsilon;
            if (as(r) > Scalar(0) && v > gmax) {
                gmax = v;
                i = n + r;
            }
            if (as(r) < C && v < gmin) {
                gmin = v;
                j = n + r;
            }
        }
        return (i < 0 || j < 0) ? Scalar(0) : gmax - gmin;
    };

    const auto shrink = [&] {
        if (!unshrunk && gmax - gmin <= Scalar(10 * opts.tolerance)) {
            unshrunk = true;
            rebuild_residual();
            active = all;
            scan();
        }
        // a variable only able to move up can never be j, and is useless as
        // i while below gmin; symmetrically for one only able to move down
        const auto pinned_out = [&](Scalar value, Scalar v, bool up_at_zero) {
            if (value <= Scalar(0)) {
                return up_at_zero ? v < gmin : v > gmax;
            }
            if (value >= C) {
                return up_at_zero ? v > gmax : v < gmin;
            }
            return false;
        };
        std::erase_if(active, [&](Index r) {
            return pinned_out(a(r), R(r) - epsilon, true) && pinned_out(as(r), R(r) + epsilon, false);
        });
    };

    constexpr Scalar tau = Scalar(1e-12);
    long iter = 0;
    Scalar violation = 0;
    const long shrink_period = std::min<long>(static_cast<long>(2 * n), 1000);
    long counter = shrink_period;
    while (true) {
        violation = scan();
        if (--counter == 0) {
            counter = shrink_period;
            shrink();
            violation = scan();
        }
        if (violation < Scalar(opts.tolerance) || iter >= opts.max_iterations) {
            if (static_cast<Index>(active.size()) == n) {
                break;
            }
            rebuild_residual();
            active = all;
            violation = scan();
            if (violation < Scalar(opts.tolerance) || iter >= opts.max_iterations) {
                break;
            }
            counter = 1;
        }
        ++iter;
        const Index ii = i < n ? i : i - n;
        if (opts.working_set == WorkingSet::second_order) {
            Scalar best = inf;
            const auto offer = [&](Index t, Index rt, Scalar v) {
                const Scalar b = gmax - v;
                Scalar q = diag(ii) + diag(rt) - Scalar(2) * K(rt, ii);
                if (q <= Scalar(0)) {
                    q = tau;
                }
                const Scalar gain = -(b * b) / q;
                if (gain < best) {
                    best = gain;
                    j = t;
                }
            };
            for (const Index r : active) {
                const Scalar v = R(r) - epsilon;
                if (a(r) > Scalar(0) && v < gmax) {
                    offer(r, r, v);
                }
            }
            for (const Index r : active) {
                const Scalar v = R(r) + epsilon;
                if (as(r) < C && v < gmax) {
                    offer(n + r, r, v);
                }
            }
        }

        const Index jj = j < n ? j : j - n;
        const Scalar yi = i < n ? Scalar(1) : Scalar(-1);
        const Scalar yj = j < n ? Scalar(1) : Scalar(-1);
        Scalar& ai_ref = i < n ? a(ii) : as(ii);
        Scalar& aj_ref = j < n ? a(jj) : as(jj);
        // gradients of the minimized dual
        const Scalar Gi = -yi * (R(ii) - yi * epsilon);
        const Scalar Gj = -yj * (R(jj) - yj * epsilon);
        const Scalar old_ai = ai_ref;
        const Scalar old_aj = aj_ref;
        Scalar ai = old_ai;
        Scalar aj = old_aj;

        Scalar quad = diag(ii) + diag(jj) - Scalar(2) * K(ii, jj);
        if (quad <= Scalar(0)) {
            quad = tau;
        }
        if (yi != yj) {
            const Scalar delta = (-Gi - Gj) / quad;
            const Scalar diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) {
                    aj = 0;
                    ai = diff;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = -diff;
            }
            if (diff > 0) {
                if (ai > C) {
                    ai = C;
                    aj = C - diff;
                }
            } else if (aj > C) {
                aj = C;
                ai = C + diff;
            }
        } else {
            const Scalar delta = (Gi - Gj) / quad;
            const Scalar sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) {
                    ai = C;
                    aj = sum - C;
                }
            } else if (aj < 0) {
                aj = 0;
                ai = sum;
            }
            if (sum > C) {
                if (aj > C) {
                    aj = C;
                    ai = sum - C;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = sum;
            }
        }
        ai_ref = ai;
        aj_ref = aj;
        // change in (alpha - alpha*) for the two underlying rows
        const Scalar di = yi * (ai - old_ai);
        const Scalar dj = yj * (aj - old_aj);
        if (static_cast<Index>(active.size()) == n) {
            R.noalias() -= di * K.col(ii) + dj * K.col(jj);
        } else {
            const Scalar* Ki = K.col(ii).data();
            const Scalar* Kj = K.col(jj).data();
            for (const Index r : active) {
                R(r) -= di * Ki[r] + dj * Kj[r];
            }
        }
    }

    // bias: average over free variables, else midpoint of the feasible interval
    Scalar ub = inf;
    Scalar lb = -inf;
    Scalar sum_free = 0;
    long n_free = 0;
    // yg is the signed gradient; a bounded variable caps rho from one side
    const auto bound = [&](Scalar value, Scalar yg, bool caps_below_at_c) {
        if (value > Scalar(0) && value < C) {
            ++n_free;
            sum_free += yg;
        } else if ((value >= C) == caps_below_at_c) {
            lb = std::max(lb, yg);
        } else {
            ub = std::min(ub, yg);
        }
    };
    for (Index r = 0; r < n; ++r) {
        bound(a(r), epsilon - R(r), true);
    }
    for (Index r = 0; r < n; ++r) {
        bound(as(r), -(R(r) + epsilon), false);
    }
    const Scalar rho = n_free > 0 ? sum_free / Scalar(n_free) : (ub + lb) / Scalar(2);

    SvrDual<Scalar> dual;
    dual.alpha.resize(2 * n);
    dual.alpha << a, as;
    dual.coeffs = a - as;
    dual.bias = -rho;
    dual.iterations = iter;
    dual.kkt_violation = violation;
    dual.converged = violation < Scalar(opts.tolerance);
    if (!dual.converged && violation > Scalar(opts.failure_violation)) {
        throw NonConvergence("svr: iteration cap reached with KKT violation " + std::to_string(violation));
    }
    return dual;
}

/// Epsilon-SVR on internally standardized features; the target is used as
/// given. See svr_solve_dual for the solver and its failure mode.
template <class DX, class DY>
SvrFit<typename DX::Scalar> svr_fit(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                                    const SvrParams<typename DX::Scalar>& params, const SvrOptions& opts = {},
                                    const Eigen::VectorX<typename DX::Scalar>* warm_alpha = nullptr)
{
    using Scalar = typename DX::Scalar;
    detail::check_svr_params(params);
    if (X.rows() != y.size()) {
        throw ValidationError("svr: X rows and y length differ");
    }
    if (X.rows() < 2) {
        throw ValidationError("svr: need at least 2 rows");
    }
    if (!all_finite(X) || !all_finite(y)) {
        throw ValidationError("svr: non-finite input");
    }

    SvrFit<Scalar> fit;
    fit.kernel = params.kernel;
    fit.gamma = params.gamma;
    fit.C = params.C;
    fit.epsilon = params.epsilon;
    fit.scaler = FeatureScaler<Scalar>::fit(X);
    fit.support_inputs = fit.scaler.transform(X);
    const Eigen::MatrixX<Scalar> K = detail::kernel_matrix(params.kernel, params.gamma, fit.support_inputs);
    const SvrDual<Scalar> dual = svr_solve_dual(K, y, params.C, params.epsilon, opts, warm_alpha);
    fit.alpha = dual.alpha;
    fit.dual_coeffs = dual.coeffs;
    fit.bias = dual.bias;
    fit.iterations = dual.iterations;
    fit.kkt_violation = dual.kkt_violation;
    fit.converged = dual.converged;
    return fit;
}

template <typename Scalar, class Derived>
Scalar svr_predict(const SvrFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& x)
{
    const Eigen::VectorX<Scalar> z = fit.scaler.transform_row(x);
    Scalar acc = fit.bias;
    for (Eigen::Index i = 0; i < fit.dual_coeffs.size(); ++i) {
        const Scalar c = fit.dual_coeffs(i);
        if (c != Scalar(0)) {
            acc += c * kernel_eval(fit.kernel, fit.gamma, fit.support_inputs.row(i).transpose(), z);
        }
    }
    return acc;
}

template <typename Scalar, class Derived>
Eigen::VectorX<Scalar> svr_predict_rows(const SvrFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& X)
{
    Eigen::VectorX<Scalar> out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        out(r) = svr_predict(fit, X.row(r).transpose());
    }
    return out;
}

} // namespace flucast
