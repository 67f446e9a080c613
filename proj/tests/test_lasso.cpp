#include "doctest.h"

#include "flucast/regressors/lasso.hpp"
#include "oracles/lasso_pgd.hpp"
#include "oracles/ols.hpp"

#include <random>

using namespace flucast;

namespace {

struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p)
{
    std::normal_distribution<double> N(0.0, 1.0);
    Problem pr{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
    Eigen::VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        beta(j) = N(rng);
        for (Eigen::Index i = 0; i < n; ++i) {
            pr.X(i, j) = N(rng) * (1.0 + j) + 0.5 * j;
        }
    }
    pr.y = pr.X * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
        pr.y(i) += 0.5 * N(rng) + 2.0;
    }
    return pr;
}

} // namespace

TEST_SUITE("lasso") {

TEST_CASE("lambda at or above lambda_max zeroes every coefficient")
{
    std::mt19937_64 rng(7);
    const auto pr = random_problem(rng, 40, 5);
    const double lmax = lasso_lambda_max(pr.X, pr.y);
    for (const double lambda : {lmax, 1.5 * lmax}) {
        for (const bool nonneg : {false, true}) {
            const auto fit = lasso_cd_fit(pr.X, pr.y, lambda, nonneg);
            CHECK((fit.coefficients.array() == 0.0).all());
            CHECK(fit.intercept == doctest::Approx(pr.y.mean()).epsilon(1e-12));
        }
    }
}

TEST_CASE("lambda zero reproduces ordinary least squares")
{
    std::mt19937_64 rng(11);
    const auto pr = random_problem(rng, 60, 4);
    const auto fit = lasso_cd_fit(pr.X, pr.y, 0.0, false);
    const Eigen::VectorXd ols = oracle::ols_with_intercept(pr.X, pr.y);
    CHECK(fit.intercept == doctest::Approx(ols(0)).epsilon(1e-6));
    for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(std::abs(fit.coefficients(j) - ols(j + 1)) < 1e-6);
    }
    // prediction on a training row matches the OLS prediction
    const Eigen::VectorXd row = pr.X.row(3).transpose();
    const double ols_pred = ols(0) + row.dot(ols.tail(4));
    CHECK(std::abs(lasso_predict(fit, row) - ols_pred) < 1e-6);
}

TEST_CASE("nonneg projects a negatively correlated feature to zero")
{
    Eigen::MatrixXd X(6, 1);
    X << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(6);
    y << 6, 5.2, 3.9, 3.1, 2.2, 0.8;
    const auto fit = lasso_cd_fit(X, y, 0.0, true);
    CHECK(fit.coefficients(0) == 0.0);
    CHECK(fit.intercept == doctest::Approx(y.mean()));
    const auto free_fit = lasso_cd_fit(X, y, 0.0, false);
    CHECK(free_fit.coefficients(0) < 0.0);
}

TEST_CASE("lambda path shape")
{
    std::mt19937_64 rng(3);
    const auto pr = random_problem(rng, 30, 3);
    const auto path = lasso_lambda_path(pr.X, pr.y);
    REQUIRE(path.size() == 50);
    CHECK(std::abs(path.front() - lasso_lambda_max(pr.X, pr.y)) <= 1e-12);
    CHECK(path.back() == doctest::Approx(1e-3 * path.front()));
    for (std::size_t k = 1; k < path.size(); ++k) {
        CHECK(path[k] < path[k - 1]);
    }

    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(30, 2.5);
    const auto zero_path = lasso_lambda_path(pr.X, flat);
    CHECK(zero_path.size() == 50);
    CHECK(std::all_of(zero_path.begin(), zero_path.end(), [](double v) { return v == 0.0; }));
    const auto fit = lasso_cd_fit(pr.X, flat, zero_path.front(), false);
    CHECK(fit.intercept == doctest::Approx(2.5));
    CHECK((fit.coefficients.array() == 0.0).all());
}

TEST_CASE("lasso_predict")
{
    LassoFit<double> fit;
    fit.coefficients = Eigen::VectorXd::Zero(3);
    fit.intercept = 1.7;
    CHECK(lasso_predict(fit, Eigen::Vector3d(4, -2, 9)) == 1.7);

    LassoFit<double> identity;
    identity.coefficients = Eigen::VectorXd::Ones(1);
    identity.intercept = 0;
    CHECK(lasso_predict(identity, Eigen::VectorXd::Constant(1, 3.25)) == 3.25);

    CHECK_THROWS_AS(lasso_predict(fit, Eigen::Vector2d(1, 2)), ValidationError);
}

TEST_CASE("coordinate descent is no worse than the proximal gradient oracle")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pr = random_problem(rng, 40, 5);
        const double lmax = lasso_lambda_max(pr.X, pr.y);
        for (const double frac : {0.0, 0.01, 0.1, 0.5}) {
            for (const bool nonneg : {false, true}) {
                const double lambda = frac * lmax;
                const auto fit = lasso_cd_fit(pr.X, pr.y, lambda, nonneg);
                const auto ref = oracle::lasso_pgd(pr.X, pr.y, lambda, nonneg);
                const double f_cd = oracle::lasso_objective(pr.X, pr.y, fit.intercept, fit.coefficients, lambda);
                const double f_ref = oracle::lasso_objective(pr.X, pr.y, ref.intercept, ref.coef, lambda);
                CHECK(f_cd <= f_ref + 1e-6);
                if (nonneg) {
                    CHECK((fit.coefficients.array() >= 0.0).all());
                }
            }
        }
    }
}

TEST_CASE("duplicated column splits weight without double counting")
{
    std::mt19937_64 rng(5);
    const auto pr = random_problem(rng, 40, 2);
    Eigen::MatrixXd X3(40, 3);
    X3 << pr.X.col(0), pr.X.col(0), pr.X.col(1);
    const double lambda = 0.05 * lasso_lambda_max(pr.X, pr.y);
    const auto single = lasso_cd_fit(pr.X, pr.y, lambda, false);
    const auto twin = lasso_cd_fit(X3, pr.y, lambda, false);
    CHECK(std::abs(twin.coefficients(0) + twin.coefficients(1) - single.coefficients(0)) < 1e-4);
    const int above = (std::abs(twin.coefficients(0)) > 1e-8) + (std::abs(twin.coefficients(1)) > 1e-8);
    CHECK(above <= 1);
}

TEST_CASE("constant feature gets a zero coefficient")
{
    std::mt19937_64 rng(9);
    auto pr = random_problem(rng, 25, 3);
    pr.X.col(1).setConstant(4.0);
    const auto fit = lasso_cd_fit(pr.X, pr.y, 0.0, false);
    CHECK(fit.coefficients(1) == 0.0);
}

TEST_CASE("invalid input")
{
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_AS(lasso_cd_fit(X, y, -1.0, false), ValidationError);
    X(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lasso_cd_fit(X, y, 0.1, false), ValidationError);
    CHECK_THROWS_AS(lasso_cd_fit(Eigen::MatrixXd::Ones(3, 2), y, 0.1, false), ValidationError);
}

TEST_CASE("fits are bit-identical across calls")
{
    std::mt19937_64 rng(77);
    const auto pr = random_problem(rng, 40, 5);
    const auto a = lasso_cd_fit(pr.X, pr.y, 0.01, true);
    const auto b = lasso_cd_fit(pr.X, pr.y, 0.01, true);
    CHECK(a.coefficients == b.coefficients);
    CHECK(a.intercept == b.intercept);
}

TEST_CASE("warm-started path agrees with cold fits")
{
    std::mt19937_64 rng(101);
    const auto pr = random_problem(rng, 40, 5);
    const auto path = lasso_lambda_path(pr.X, pr.y);
    const auto fits = lasso_path_fit(pr.X, pr.y, path, true);
    for (std::size_t k = 0; k < path.size(); k += 7) {
        const auto cold = lasso_cd_fit(pr.X, pr.y, path[k], true);
        CHECK((fits[k].coefficients - cold.coefficients).cwiseAbs().maxCoeff() < 1e-6);
    }
}

}
