#include "flucast/weak_predictors.hpp"

#include "flucast/regressors/cross_validation.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace flucast {

SourceKind parse_source_kind(std::string_view name)
{
    if (name == "linear_map") {
        return SourceKind::linear_map;
    }
    if (name == "multiquery_lasso") {
        return SourceKind::multiquery_lasso;
    }
    if (name == "arx_exog") {
        return SourceKind::arx_exog;
    }
    if (name == "passthrough") {
        return SourceKind::passthrough;
    }
    throw ValidationError("unknown source kind '" + std::string(name) + "'");
}

std::string_view to_string(SourceKind kind)
{
    switch (kind) {
    case SourceKind::linear_map:
        return "linear_map";
    case SourceKind::multiquery_lasso:
        return "multiquery_lasso";
    case SourceKind::arx_exog:
        return "arx_exog";
    case SourceKind::passthrough:
        return "passthrough";
    }
    return "?";
}

TrainingMode parse_training_mode(std::string_view name)
{
    if (name == "expanding") {
        return TrainingMode::expanding;
    }
    if (name == "fixed_window") {
        return TrainingMode::fixed_window;
    }
    throw ValidationError("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(TrainingMode mode)
{
    return mode == TrainingMode::expanding ? "expanding" : "fixed_window";
}

int default_min_history(SourceKind kind)
{
    switch (kind) {
    case SourceKind::linear_map:
        return 8;
    case SourceKind::multiquery_lasso:
        return kGtMinRows;
    case SourceKind::arx_exog:
        return kArxMinRows;
    case SourceKind::passthrough:
        return 1;
    }
    return 1;
}

LinearMapFit fit_linear_map(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw ValidationError("fit_linear_map: length mismatch");
    }
    if (x.size() < 3) {
        throw InsufficientData("fit_linear_map: need at least 3 pairs");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 1e-12 * (1.0 + mx * mx) * n)) {
        throw ValidationError("fit_linear_map: constant x");
    }
    LinearMapFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_train = static_cast<int>(x.size());
    if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept)) {
        throw ValidationError("fit_linear_map: non-finite fit");
    }
    return fit;
}

double predict_linear_map(const LinearMapFit& fit, double x)
{
    return std::max(0.0, fit.slope * x + fit.intercept);
}

ArxFit fit_arx(const Eigen::MatrixXd& lags, const std::optional<Eigen::VectorXd>& exog, const Eigen::VectorXd& targets,
               int horizon)
{
    const Eigen::Index n = lags.rows();
    if (lags.cols() != 3) {
        throw ValidationError("fit_arx: need exactly 3 lag columns");
    }
    if (targets.size() != n || (exog && exog->size() != n)) {
        throw ValidationError("fit_arx: length mismatch");
    }
    if (n < kArxMinRows) {
        throw InsufficientData("fit_arx: need at least " + std::to_string(kArxMinRows) + " rows, have " +
                               std::to_string(n));
    }
    if (!all_finite(lags) || !all_finite(targets) || (exog && !all_finite(*exog))) {
        throw ValidationError("fit_arx: non-finite input");
    }
    const Eigen::Index p = exog ? 5 : 4;
    // [A; sqrt(ridge) I] b = [y; 0] has the ridge-stabilized normal equations
    // as its own, and QR avoids squaring the condition number.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + p, p);
    A.topLeftCorner(n, 1).setOnes();
    A.block(0, 1, n, 3) = lags;
    if (exog) {
        A.block(0, 4, n, 1) = *exog;
    }
    A.bottomRows(p).diagonal().setConstant(std::sqrt(kArxRidge));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + p);
    rhs.head(n) = targets;
    const Eigen::VectorXd b = A.householderQr().solve(rhs);

    ArxFit fit;
    fit.intercept = b(0);
    fit.lag_coeffs = {b(1), b(2), b(3)};
    if (exog) {
        fit.exog_coeff = b(4);
    }
    fit.horizon = horizon;
    return fit;
}

double predict_arx(const ArxFit& fit, const std::array<double, 3>& lags, std::optional<double> exog)
{
    if (fit.exog_coeff.has_value() != exog.has_value()) {
        throw ValidationError("predict_arx: exogenous input presence does not match the fit");
    }
    double v = fit.intercept;
    for (std::size_t k = 0; k < 3; ++k) {
        v += fit.lag_coeffs[k] * lags[k];
    }
    if (exog) {
        v += *fit.exog_coeff * *exog;
    }
    return std::max(0.0, v);
}

LassoFit<double> gt_multiquery_fit(const Eigen::MatrixXd& queries, const Eigen::VectorXd& targets,
                                   const GtOptions& opts)
{
    if (queries.rows() < kGtMinRows) {
        throw InsufficientData("gt_multiquery_fit: need at least " + std::to_string(kGtMinRows) + " rows");
    }
    if (opts.lambda) {
        return lasso_cd_fit(queries, targets, *opts.lambda, false);
    }
    const std::vector<double> path = lasso_lambda_path(queries, targets);
    if (path.front() == 0.0) {
        return lasso_cd_fit(queries, targets, 0.0, false);
    }
    const CvPlan<double> plan{opts.cv_folds, path};
    const auto cv = cv_select_grid(queries, targets, plan,
                                   [](const Eigen::MatrixXd& Xt, const Eigen::VectorXd& yt,
                                      std::span<const double> grid, const Eigen::MatrixXd& Xv) {
                                       Eigen::MatrixXd out(Xv.rows(), static_cast<Eigen::Index>(grid.size()));
                                       const auto fits =
                                           lasso_path_fit(Xt, yt, std::vector<double>(grid.begin(), grid.end()), false);
                                       for (std::size_t k = 0; k < fits.size(); ++k) {
                                           out.col(static_cast<Eigen::Index>(k)) = lasso_predict_rows(fits[k], Xv);
                                       }
                                       return out;
                                   });
    return lasso_cd_fit(queries, targets, cv.best, false);
}

namespace {

const VintagedSeries& single_source(const SourceSpec& spec, const Panel& panel)
{
    const auto it = panel.sources.find(spec.id);
    if (it == panel.sources.end()) {
        throw ValidationError("panel has no source '" + spec.id + "'");
    }
    return it->second;
}

// Inclusive upper bound on source weeks usable for training.
std::optional<EpiWeek> window_end(const SourceSpec& spec, std::optional<EpiWeek> first_week)
{
    if (spec.training != TrainingMode::fixed_window || !first_week) {
        return std::nullopt;
    }
    return *first_week + (spec.window_weeks - 1);
}

double latest_source_value(const SourceSpec& spec, const Snapshot& snap, EpiWeek week)
{
    const auto v = snap.at(week);
    if (!v) {
        throw MissingObservation("source '" + spec.id + "' has no value for " + to_label(week) + " as of " +
                                 to_label(snap.issue_week));
    }
    return *v;
}

void require_rows(const SourceSpec& spec, std::size_t rows)
{
    if (static_cast<int>(rows) < spec.effective_min_history()) {
        throw InsufficientData("source '" + spec.id + "': " + std::to_string(rows) + " training rows, need " +
                               std::to_string(spec.effective_min_history()));
    }
}

WeakEstimate linear_map_nowcast(const SourceSpec& spec, const Panel& panel, EpiWeek issue, EpiWeek latest, int shift)
{
    const VintagedSeries& src = single_source(spec, panel);
    const Snapshot snap = src.as_of(issue);
    const double x_now = latest_source_value(spec, snap, latest);
    const Snapshot cdc = panel.cdc.first_release_as_of(issue);
    const auto last = window_end(spec, src.first_target_week());
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [week, value] : snap.values) {
        if (last && week > *last) {
            break;
        }
        if (const auto y = cdc.at(week + shift)) {
            xs.push_back(value);
            ys.push_back(*y);
        }
    }
    require_rows(spec, xs.size());
    const LinearMapFit fit = fit_linear_map(xs, ys);
    return {spec.id, issue, issue - 1, predict_linear_map(fit, x_now), fit.n_train};
}

std::array<double, 3> cdc_lags(const VintagedSeries& cdc, EpiWeek as_of, int cdc_lag, bool& ok)
{
    std::array<double, 3> out{};
    ok = true;
    for (int k = 0; k < 3; ++k) {
        const auto v = cdc.value_as_of(as_of - (cdc_lag + k), as_of);
        if (!v) {
            ok = false;
            return out;
        }
        out[static_cast<std::size_t>(k)] = *v;
    }
    return out;
}

WeakEstimate arx_nowcast(const SourceSpec& spec, const Panel& panel, EpiWeek issue, EpiWeek latest, int shift,
                         int cdc_lag)
{
    const VintagedSeries& src = single_source(spec, panel);
    const Snapshot snap = src.as_of(issue);
    const double exog_now = latest_source_value(spec, snap, latest);
    bool ok = false;
    const auto lags_now = cdc_lags(panel.cdc, issue, cdc_lag, ok);
    if (!ok) {
        throw InsufficientData("source '" + spec.id + "': CDC lags unavailable at " + to_label(issue));
    }
    const Snapshot cdc = panel.cdc.first_release_as_of(issue);
    const auto last = window_end(spec, src.first_target_week());

    // row for target week w: exog at w - shift, lags as known at w + 1
    std::vector<std::array<double, 3>> lag_rows;
    std::vector<double> exog;
    std::vector<double> targets;
    for (const auto& [week, value] : snap.values) {
        if (last && week > *last) {
            break;
        }
        const EpiWeek target = week + shift;
        const auto y = cdc.at(target);
        if (!y) {
            continue;
        }
        const auto lags = cdc_lags(panel.cdc, target + 1, cdc_lag, ok);
        if (!ok) {
            continue;
        }
        lag_rows.push_back(lags);
        exog.push_back(value);
        targets.push_back(*y);
    }
    require_rows(spec, targets.size());
    const auto n = static_cast<Eigen::Index>(targets.size());
    Eigen::MatrixXd L(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < 3; ++k) {
            L(i, k) = lag_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
    }
    const ArxFit fit = fit_arx(L, Eigen::Map<const Eigen::VectorXd>(exog.data(), n),
                               Eigen::Map<const Eigen::VectorXd>(targets.data(), n), 0);
    return {spec.id, issue, issue - 1, predict_arx(fit, lags_now, exog_now), static_cast<int>(n)};
}

WeakEstimate multiquery_nowcast(const SourceSpec& spec, const Panel& panel, EpiWeek issue, EpiWeek latest, int shift,
                                int folds)
{
    const auto it = panel.query_panels.find(spec.id);
    if (it == panel.query_panels.end()) {
        throw ValidationError("panel has no query panel for '" + spec.id + "'");
    }
    const QueryPanel& qp = it->second;
    if (qp.columns.empty()) {
        throw ValidationError("query panel '" + spec.id + "' has no columns");
    }
    std::vector<Snapshot> snaps;
    snaps.reserve(qp.columns.size());
    for (const auto& col : qp.columns) {
        snaps.push_back(col.as_of(issue));
    }
    const auto q = static_cast<Eigen::Index>(snaps.size());
    const auto row_at = [&](EpiWeek week, Eigen::VectorXd& row) {
        for (Eigen::Index j = 0; j < q; ++j) {
            const auto v = snaps[static_cast<std::size_t>(j)].at(week);
            if (!v) {
                return false;
            }
            row(j) = *v;
        }
        return true;
    };
    Eigen::VectorXd now(q);
    if (!row_at(latest, now)) {
        throw MissingObservation("source '" + spec.id + "' has no complete query row for " + to_label(latest) +
                                 " as of " + to_label(issue));
    }
    const Snapshot cdc = panel.cdc.first_release_as_of(issue);
    const auto last = window_end(spec, qp.columns.front().first_target_week());
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> targets;
    Eigen::VectorXd row(q);
    for (const auto& [week, unused] : snaps.front().values) {
        (void)unused;
        if (last && week > *last) {
            break;
        }
        const auto y = cdc.at(week + shift);
        if (y && row_at(week, row)) {
            rows.push_back(row);
            targets.push_back(*y);
        }
    }
    require_rows(spec, targets.size());
    const auto n = static_cast<Eigen::Index>(targets.size());
    Eigen::MatrixXd X(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        X.row(i) = rows[static_cast<std::size_t>(i)].transpose();
    }
    const auto fit = gt_multiquery_fit(X, Eigen::Map<const Eigen::VectorXd>(targets.data(), n), {folds, std::nullopt});
    return {spec.id, issue, issue - 1, std::max(0.0, lasso_predict(fit, now)), static_cast<int>(n)};
}

} // namespace

WeakEstimate weak_nowcast(const SourceSpec& spec, const Panel& panel, EpiWeek issue, const WeakOptions& opts)
{
    if (spec.lag_weeks < 0) {
        throw ValidationError("source '" + spec.id + "': lag_weeks must be >= 0");
    }
    if (panel.cdc.empty()) {
        throw InsufficientData("no CDC observations");
    }
    // the newest source week visible at `issue`, and how far it sits before
    // the target week issue - 1
    const EpiWeek latest = issue - spec.lag_weeks;
    const int shift = spec.lag_weeks - 1;
    switch (spec.kind) {
    case SourceKind::passthrough: {
        const Snapshot snap = single_source(spec, panel).as_of(issue);
        return {spec.id, issue, issue - 1, std::max(0.0, latest_source_value(spec, snap, latest)), 0};
    }
    case SourceKind::linear_map:
        return linear_map_nowcast(spec, panel, issue, latest, shift);
    case SourceKind::arx_exog:
        return arx_nowcast(spec, panel, issue, latest, shift, opts.cdc_lag_weeks);
    case SourceKind::multiquery_lasso:
        return multiquery_nowcast(spec, panel, issue, latest, shift, opts.cv_folds);
    }
    throw ValidationError("unhandled source kind");
}

} // namespace flucast
