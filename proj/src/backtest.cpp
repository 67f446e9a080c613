#include "flucast/backtest.hpp"

#include "flucast/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>

namespace flucast {

std::string_view horizon_label(int h)
{
    switch (h) {
    case 0:
        return "last week";
    case 1:
        return "this week";
    case 2:
        return "next week";
    case 3:
        return "in two weeks";
    default:
        throw ValidationError("horizon must be in 0..3, got " + std::to_string(h));
    }
}

Method parse_method(std::string_view name)
{
    for (const Method m : all_methods()) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ValidationError("unknown ensemble method '" + std::string(name) + "'");
}

std::string_view to_string(Method method)
{
    switch (method) {
    case Method::lasso_nn:
        return "lasso_nn";
    case Method::svr_rbf:
        return "svr_rbf";
    case Method::svr_linear:
        return "svr_linear";
    case Method::adaboost:
        return "adaboost";
    case Method::ar3_baseline:
        return "ar3_baseline";
    }
    return "?";
}

std::vector<Method> all_methods()
{
    return {Method::lasso_nn, Method::svr_rbf, Method::svr_linear, Method::adaboost, Method::ar3_baseline};
}

std::vector<std::string> BacktestConfig::feature_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(sources.size());
    for (const auto& s : sources) {
        ids.push_back(s.id);
    }
    return ids;
}

void BacktestConfig::validate() const
{
    if (sources.empty()) {
        throw ValidationError("config: at least one source is required");
    }
    std::set<std::string> seen;
    for (const auto& s : sources) {
        if (s.id.empty()) {
            throw ValidationError("config: source id must not be empty");
        }
        if (s.id == "cdc") {
            throw ValidationError("config: 'cdc' is the target, not a source");
        }
        for (const Method m : all_methods()) {
            if (s.id == to_string(m)) {
                throw ValidationError("config: source id '" + s.id + "' collides with a method name");
            }
        }
        if (!seen.insert(s.id).second) {
            throw ValidationError("config: duplicate source '" + s.id + "'");
        }
        if (s.lag_weeks < 0) {
            throw ValidationError("config: source '" + s.id + "' has a negative lag");
        }
        if (s.window_weeks < 1) {
            throw ValidationError("config: source '" + s.id + "' window_weeks must be >= 1");
        }
        if (s.min_history < 0) {
            throw ValidationError("config: source '" + s.id + "' min_history must be >= 0");
        }
    }
    if (cdc_lag_weeks < 1) {
        throw ValidationError("config: cdc_lag_weeks must be >= 1");
    }
    if (!(first_issue < last_issue)) {
        throw ValidationError("config: first_issue must precede last_issue");
    }
    if (min_training_rows < 8) {
        throw ValidationError("config: min_training_rows must be >= 8");
    }
    if (cv_folds < 2) {
        throw ValidationError("config: cv.folds must be >= 2");
    }
    if (methods.empty()) {
        throw ValidationError("config: no ensemble methods selected");
    }
    if (adaboost_rounds < 1 || adaboost_depth < 0) {
        throw ValidationError("config: adaboost rounds must be >= 1 and depth >= 0");
    }
    if (evaluation_start && evaluation_end && *evaluation_end < *evaluation_start) {
        throw ValidationError("config: evaluation.start is after evaluation.end");
    }
}

void WeakLedger::add(WeakEstimate estimate)
{
    auto& per_issue = by_source_[estimate.source_id];
    const EpiWeek issue = estimate.issue_week;
    if (!per_issue.emplace(issue, std::move(estimate)).second) {
        throw ValidationError("weak ledger: estimate already recorded for this source and issue");
    }
}

const WeakEstimate* WeakLedger::find(const std::string& source, EpiWeek issue) const
{
    const auto s = by_source_.find(source);
    if (s == by_source_.end()) {
        return nullptr;
    }
    const auto e = s->second.find(issue);
    return e == s->second.end() ? nullptr : &e->second;
}

std::vector<WeakEstimate> WeakLedger::estimates() const
{
    std::vector<WeakEstimate> out;
    for (const auto& [source, per_issue] : by_source_) {
        for (const auto& [issue, est] : per_issue) {
            out.push_back(est);
        }
    }
    std::sort(out.begin(), out.end(), [](const WeakEstimate& a, const WeakEstimate& b) {
        return std::tie(a.issue_week, a.source_id) < std::tie(b.issue_week, b.source_id);
    });
    return out;
}

std::vector<EpiWeek> WeakLedger::issues(const std::string& source) const
{
    std::vector<EpiWeek> out;
    const auto s = by_source_.find(source);
    if (s != by_source_.end()) {
        for (const auto& [issue, est] : s->second) {
            out.push_back(issue);
        }
    }
    return out;
}

std::size_t WeakLedger::size() const
{
    std::size_t n = 0;
    for (const auto& [source, per_issue] : by_source_) {
        n += per_issue.size();
    }
    return n;
}

WeakLedger build_weak_ledger(const BacktestConfig& config, const Panel& panel, std::optional<EpiWeek> through)
{
    const auto cdc_start = panel.cdc.first_target_week();
    if (!cdc_start) {
        throw InsufficientData("panel has no CDC observations");
    }
    const EpiWeek start = config.ledger_start.value_or(*cdc_start);
    const EpiWeek stop = through.value_or(config.last_issue);
    const WeakOptions opts{config.cdc_lag_weeks, config.cv_folds};

    WeakLedger ledger;
    for (EpiWeek issue = start; issue <= stop; issue = issue + 1) {
        for (const auto& spec : config.sources) {
            try {
                ledger.add(weak_nowcast(spec, panel, issue, opts));
            } catch (const InsufficientData&) {
                // not enough history yet
            } catch (const MissingObservation&) {
                // source not reporting this week
            }
        }
    }
    if (start <= stop) {
        for (const auto& spec : config.sources) {
            bool any = false;
            for (EpiWeek issue = start; issue <= stop && !any; issue = issue + 1) {
                any = ledger.find(spec.id, issue) != nullptr;
            }
            if (!any) {
                throw InsufficientData("source '" + spec.id + "' never reaches its minimum history by " +
                                       to_label(stop));
            }
        }
    }
    return ledger;
}

DesignMatrix build_design_matrix(const WeakLedger& ledger, const std::vector<std::string>& features,
                                 const VintagedSeries& cdc, int horizon, EpiWeek issue, int cdc_lag_weeks, int min_rows)
{
    (void)horizon_label(horizon);
    if (features.empty()) {
        throw ValidationError("design matrix: no features");
    }
    DesignMatrix dm;
    dm.issue = issue;
    dm.horizon = horizon;
    dm.features = features;

    // newest row whose target could be first reported by `issue`
    const EpiWeek newest = issue - (horizon + cdc_lag_weeks - 1);
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    for (const EpiWeek t : ledger.issues(features.front())) {
        if (newest < t) {
            break;
        }
        std::vector<double> row;
        row.reserve(features.size());
        for (const auto& f : features) {
            const WeakEstimate* est = ledger.find(f, t);
            if (!est) {
                break;
            }
            row.push_back(est->value);
        }
        if (row.size() != features.size()) {
            continue;
        }
        const auto first = cdc.first_release(horizon_target(t, horizon));
        if (!first || issue < first->report_week) {
            continue;
        }
        rows.push_back(std::move(row));
        targets.push_back(first->value);
        dm.row_issues.push_back(t);
    }
    if (static_cast<int>(rows.size()) < min_rows) {
        throw InsufficientData("design matrix at " + to_label(issue) + " h=" + std::to_string(horizon) + ": " +
                               std::to_string(rows.size()) + " rows, need " + std::to_string(min_rows));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(features.size());
    dm.X.resize(n, p);
    dm.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            dm.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        dm.y(i) = targets[static_cast<std::size_t>(i)];
    }
    return dm;
}

namespace {

double population_sd(const Eigen::VectorXd& y)
{
    return std::sqrt((y.array() - y.mean()).square().sum() / static_cast<double>(y.size()));
}

std::vector<SvrParams<double>> svr_grid(Kernel kernel, const Eigen::VectorXd& y, Eigen::Index p)
{
    const double sd = population_sd(y);
    std::vector<SvrParams<double>> grid;
    for (const double C : {0.1, 1.0, 10.0, 100.0}) {
        for (const double e : {0.01, 0.05, 0.1}) {
            if (kernel == Kernel::linear) {
                grid.push_back({C, e * sd, Kernel::linear, 1.0});
                continue;
            }
            for (const double g : {0.01, 0.1, 1.0}) {
                grid.push_back({C, e * sd, Kernel::rbf, g / static_cast<double>(p)});
            }
        }
    }
    return grid;
}

// Grid entries sharing (kernel, gamma, epsilon), in ascending C. Each chain
// is solved in order, starting every solve from the previous solution scaled
// by the C ratio.
std::vector<std::vector<std::size_t>> svr_c_chains(std::span<const SvrParams<double>> grid)
{
    std::map<std::tuple<int, double, double>, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        groups[{static_cast<int>(grid[k].kernel), grid[k].gamma, grid[k].epsilon}].push_back(k);
    }
    std::vector<std::vector<std::size_t>> chains;
    for (auto& [key, idx] : groups) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return grid[a].C < grid[b].C; });
        chains.push_back(std::move(idx));
    }
    return chains;
}

Eigen::VectorXd scaled_warm_start(const Eigen::VectorXd& alpha, double from_c, double to_c)
{
    return (alpha * (to_c / from_c)).cwiseMin(to_c).cwiseMax(0.0);
}

// Validation predictions for every grid entry. One kernel matrix per
// (kernel, gamma) is shared by its C / epsilon values.
Eigen::MatrixXd svr_grid_predictions(const Eigen::MatrixXd& Xt, const Eigen::VectorXd& yt,
                                     std::span<const SvrParams<double>> grid, const Eigen::MatrixXd& Xv)
{
    const auto scaler = FeatureScaler<double>::fit(Xt);
    const Eigen::MatrixXd Zt = scaler.transform(Xt);
    const Eigen::MatrixXd Zv = scaler.transform(Xv);
    Eigen::MatrixXd out(Xv.rows(), static_cast<Eigen::Index>(grid.size()));
    std::map<std::pair<int, double>, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> kernels;
    for (const auto& chain : svr_c_chains(grid)) {
        const auto& first = grid[chain.front()];
        const std::pair<int, double> key{static_cast<int>(first.kernel), first.gamma};
        auto it = kernels.find(key);
        if (it == kernels.end()) {
            it = kernels
                     .emplace(key, std::make_pair(detail::kernel_matrix(first.kernel, first.gamma, Zt),
                                                  detail::cross_kernel(first.kernel, first.gamma, Zv, Zt)))
                     .first;
        }
        std::optional<Eigen::VectorXd> warm;
        double warm_c = 0.0;
        for (const std::size_t k : chain) {
            const auto& prm = grid[k];
            const auto col = static_cast<Eigen::Index>(k);
            try {
                Eigen::VectorXd start;
                if (warm) {
                    start = scaled_warm_start(*warm, warm_c, prm.C);
                }
                const auto dual = svr_solve_dual(it->second.first, yt, prm.C, prm.epsilon, SvrOptions{},
                                                 warm ? &start : nullptr);
                out.col(col) = (it->second.second * dual.coeffs).array() + dual.bias;
                warm = dual.alpha;
                warm_c = prm.C;
            } catch (const NonConvergence&) {
                out.col(col).setConstant(std::numeric_limits<double>::quiet_NaN());
                warm.reset();
            }
        }
    }
    return out;
}

// Final fit for the selected entry, reached along the same C chain the
// cross-validation used.
SvrFit<double> svr_fit_chained(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               std::span<const SvrParams<double>> grid, const SvrParams<double>& best)
{
    std::optional<SvrFit<double>> fit;
    for (const auto& chain : svr_c_chains(grid)) {
        const auto& head = grid[chain.front()];
        if (head.kernel != best.kernel || head.gamma != best.gamma || head.epsilon != best.epsilon) {
            continue;
        }
        for (const std::size_t k : chain) {
            const auto& prm = grid[k];
            if (prm.C > best.C) {
                break;
            }
            try {
                Eigen::VectorXd start;
                if (fit) {
                    start = scaled_warm_start(fit->alpha, fit->C, prm.C);
                }
                fit = svr_fit(X, y, prm, SvrOptions{}, fit ? &start : nullptr);
            } catch (const NonConvergence&) {
                if (prm.C == best.C) {
                    throw;
                }
                fit.reset();
            }
        }
    }
    if (!fit) {
        fit = svr_fit(X, y, best);
    }
    return *fit;
}

double lasso_nn_predict(const DesignMatrix& dm, const Eigen::VectorXd& current, int folds)
{
    const std::vector<double> path = lasso_lambda_path(dm.X, dm.y);
    double lambda = 0.0;
    if (path.front() > 0.0) {
        const CvPlan<double> plan{folds, path};
        lambda = cv_select_grid(dm.X, dm.y, plan,
                                [](const Eigen::MatrixXd& Xt, const Eigen::VectorXd& yt, std::span<const double> grid,
                                   const Eigen::MatrixXd& Xv) {
                                    const auto fits =
                                        lasso_path_fit(Xt, yt, std::vector<double>(grid.begin(), grid.end()), true);
                                    Eigen::MatrixXd out(Xv.rows(), static_cast<Eigen::Index>(grid.size()));
                                    for (std::size_t k = 0; k < fits.size(); ++k) {
                                        out.col(static_cast<Eigen::Index>(k)) = lasso_predict_rows(fits[k], Xv);
                                    }
                                    return out;
                                })
                     .best;
    }
    const auto fit = lasso_cd_fit(dm.X, dm.y, lambda, true);
    return lasso_predict(fit, current);
}

double svr_predict_cv(Kernel kernel, const DesignMatrix& dm, const Eigen::VectorXd& current, int folds)
{
    const CvPlan<SvrParams<double>> plan{folds, svr_grid(kernel, dm.y, dm.X.cols())};
    const auto cv = cv_select_grid(dm.X, dm.y, plan, svr_grid_predictions);
    const auto fit = svr_fit_chained(dm.X, dm.y, plan.grid, cv.best);
    return svr_predict(fit, current);
}

} // namespace

double ensemble_predict(Method method, const DesignMatrix& design, const Eigen::VectorXd& current,
                        const BacktestConfig& config)
{
    if (current.size() != design.X.cols()) {
        throw ValidationError("ensemble_predict: feature row has the wrong length");
    }
    switch (method) {
    case Method::lasso_nn:
        return lasso_nn_predict(design, current, config.cv_folds);
    case Method::svr_rbf:
        return svr_predict_cv(Kernel::rbf, design, current, config.cv_folds);
    case Method::svr_linear:
        return svr_predict_cv(Kernel::linear, design, current, config.cv_folds);
    case Method::adaboost: {
        const auto fit = adaboost_r2_fit(design.X, design.y, config.adaboost_rounds, config.adaboost_depth);
        return adaboost_predict(fit, current);
    }
    case Method::ar3_baseline:
        break;
    }
    throw ValidationError("ensemble_predict: ar3_baseline does not stack weak estimates");
}

std::pair<double, int> ar3_predict(const VintagedSeries& cdc, EpiWeek issue, int horizon, int cdc_lag_weeks)
{
    (void)horizon_label(horizon);
    const auto lags_at = [&](EpiWeek t, std::array<double, 3>& out) {
        for (int k = 0; k < 3; ++k) {
            const auto v = cdc.value_as_of(t - (cdc_lag_weeks + k), t);
            if (!v) {
                return false;
            }
            out[static_cast<std::size_t>(k)] = *v;
        }
        return true;
    };
    std::array<double, 3> now{};
    if (!lags_at(issue, now)) {
        throw InsufficientData("ar3: CDC lags unavailable at " + to_label(issue));
    }
    std::vector<std::array<double, 3>> lag_rows;
    std::vector<double> targets;
    const Snapshot first = cdc.first_release_as_of(issue);
    for (const auto& [week, value] : first.values) {
        const EpiWeek t = week - (horizon - 1); // row issue whose horizon-h target is `week`
        std::array<double, 3> row{};
        if (!lags_at(t, row)) {
            continue;
        }
        lag_rows.push_back(row);
        targets.push_back(value);
    }
    const auto n = static_cast<Eigen::Index>(targets.size());
    if (n < kArxMinRows) {
        throw InsufficientData("ar3: " + std::to_string(n) + " training rows at " + to_label(issue));
    }
    Eigen::MatrixXd L(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < 3; ++k) {
            L(i, k) = lag_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
    }
    const ArxFit fit = fit_arx(L, std::nullopt, Eigen::Map<const Eigen::VectorXd>(targets.data(), n), horizon);
    return {predict_arx(fit, now, std::nullopt), static_cast<int>(n)};
}

std::vector<PredictionRecord> run_issue(const BacktestConfig& config, const Panel& panel, const WeakLedger& ledger,
                                        EpiWeek issue, std::vector<IssueFailure>* failures)
{
    const auto fail = [&](int h, Method m, const std::string& why) {
        if (failures) {
            failures->push_back({issue, h, std::string(to_string(m)), why});
        }
    };
    const std::vector<std::string> features = config.feature_ids();
    std::vector<Method> stackers;
    bool baseline = false;
    for (const Method m : config.methods) {
        if (m == Method::ar3_baseline) {
            baseline = true;
        } else {
            stackers.push_back(m);
        }
    }

    std::optional<std::string> missing;
    Eigen::VectorXd current(static_cast<Eigen::Index>(features.size()));
    for (std::size_t j = 0; j < features.size(); ++j) {
        const WeakEstimate* est = ledger.find(features[j], issue);
        if (!est) {
            missing = "no weak estimate for '" + features[j] + "' at " + to_label(issue);
            break;
        }
        current(static_cast<Eigen::Index>(j)) = est->value;
    }

    std::vector<PredictionRecord> out;
    for (int h = 0; h < kHorizonCount; ++h) {
        const EpiWeek target = horizon_target(issue, h);
        if (!stackers.empty()) {
            std::optional<DesignMatrix> dm;
            std::string why;
            if (missing) {
                why = *missing;
            } else {
                try {
                    dm = build_design_matrix(ledger, features, panel.cdc, h, issue, config.cdc_lag_weeks,
                                             config.min_training_rows);
                } catch (const InsufficientData& e) {
                    why = e.what();
                }
            }
            for (const Method m : stackers) {
                if (!dm) {
                    fail(h, m, why);
                    continue;
                }
                try {
                    const double v = ensemble_predict(m, *dm, current, config);
                    out.push_back({issue, h, std::string(to_string(m)), target, std::max(0.0, v),
                                   static_cast<int>(dm->rows())});
                } catch (const NonConvergence& e) {
                    fail(h, m, e.what());
                } catch (const InsufficientData& e) {
                    fail(h, m, e.what());
                }
            }
        }
        if (baseline) {
            try {
                const auto [v, n] = ar3_predict(panel.cdc, issue, h, config.cdc_lag_weeks);
                out.push_back({issue, h, std::string(to_string(Method::ar3_baseline)), target, std::max(0.0, v), n});
            } catch (const InsufficientData& e) {
                fail(h, Method::ar3_baseline, e.what());
            }
        }
    }
    return out;
}

void sort_records(std::vector<PredictionRecord>& records)
{
    std::sort(records.begin(), records.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
        return std::tie(a.issue_week, a.horizon, a.model) < std::tie(b.issue_week, b.horizon, b.model);
    });
}

PredictionLedger run_backtest(const BacktestConfig& config, const Panel& panel)
{
    config.validate();
    const WeakLedger weak = build_weak_ledger(config, panel);

    PredictionLedger ledger;
    ledger.config = config;
    for (EpiWeek issue = config.first_issue; issue <= config.last_issue; issue = issue + 1) {
        auto recs = run_issue(config, panel, weak, issue, &ledger.failures);
        ledger.records.insert(ledger.records.end(), std::make_move_iterator(recs.begin()),
                              std::make_move_iterator(recs.end()));
    }
    ledger.weak_estimates = weak.estimates();
    for (const auto& est : ledger.weak_estimates) {
        if (config.first_issue <= est.issue_week && est.issue_week <= config.last_issue) {
            ledger.records.push_back({est.issue_week, 0, est.source_id, est.target_week, est.value, est.n_train});
        }
    }
    sort_records(ledger.records);
    return ledger;
}

} // namespace flucast
