#pragma once

#include "flucast/errors.hpp"

#include <Eigen/Core>

#include <cmath>

namespace flucast {

/// Per-column mean and population standard deviation. A column whose spread is
/// negligible next to its mean gets stdev 0 and maps to 0 after scaling.
template <typename Scalar>
struct FeatureScaler {
    Eigen::VectorX<Scalar> mean;
    Eigen::VectorX<Scalar> stdev;

    Eigen::Index dim() const { return mean.size(); }
    bool is_constant(Eigen::Index j) const { return stdev(j) == Scalar(0); }

    template <class Derived>
    static FeatureScaler fit(const Eigen::MatrixBase<Derived>& X)
    {
        const Eigen::Index n = X.rows();
        FeatureScaler s;
        s.mean = X.colwise().mean().transpose();
        s.stdev.resize(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const Scalar var = (X.col(j).array() - s.mean(j)).square().sum() / Scalar(n);
            const Scalar sd = std::sqrt(var);
            s.stdev(j) = sd <= Scalar(1e-12) * (Scalar(1) + std::abs(s.mean(j))) ? Scalar(0) : sd;
        }
        return s;
    }

    template <class Derived>
    Eigen::MatrixX<Scalar> transform(const Eigen::MatrixBase<Derived>& X) const
    {
        if (X.cols() != dim()) {
            throw ValidationError("feature dimension mismatch");
        }
        Eigen::MatrixX<Scalar> Z(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (is_constant(j)) {
                Z.col(j).setZero();
            } else {
                Z.col(j) = (X.col(j).array() - mean(j)) / stdev(j);
            }
        }
        return Z;
    }

    template <class Derived>
    Eigen::VectorX<Scalar> transform_row(const Eigen::MatrixBase<Derived>& x) const
    {
        if (x.size() != dim()) {
            throw ValidationError("feature dimension mismatch");
        }
        Eigen::VectorX<Scalar> z(x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            z(j) = is_constant(j) ? Scalar(0) : (x(j) - mean(j)) / stdev(j);
        }
        return z;
    }
};

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.derived().array().isFinite().all();
}

} // namespace flucast
