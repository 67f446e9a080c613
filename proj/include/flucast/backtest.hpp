#pragma once

#include "flucast/weak_predictors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flucast {

inline constexpr int kHorizonCount = 4;

/// "last week", "this week", "next week", "in two weeks" for h = 0..3.
std::string_view horizon_label(int h);

/// Week a horizon-h prediction issued at `issue` refers to.
inline EpiWeek horizon_target(EpiWeek issue, int h) { return issue + (h - 1); }

enum class Method { lasso_nn, svr_rbf, svr_linear, adaboost, ar3_baseline };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
std::vector<Method> all_methods();

struct BacktestConfig {
    std::vector<SourceSpec> sources;
    int cdc_lag_weeks = 2;
    EpiWeek first_issue;
    EpiWeek last_issue;
    std::optional<EpiWeek> ledger_start; // first issue that gets weak estimates
    int min_training_rows = 31;
    std::vector<Method> methods = all_methods();
    int cv_folds = 5;
    std::uint64_t seed = 0;
    std::optional<EpiWeek> evaluation_start;
    std::optional<EpiWeek> evaluation_end;
    std::optional<std::string> gt_queries; // query CSV path, relative to the config file
    int adaboost_rounds = 50;
    int adaboost_depth = 3;

    std::vector<std::string> feature_ids() const;
    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;
};

/// Weak estimates keyed by (source, issue). Each is written once.
class WeakLedger {
public:
    void add(WeakEstimate estimate);
    const WeakEstimate* find(const std::string& source, EpiWeek issue) const;
    /// Ordered by (issue, source).
    std::vector<WeakEstimate> estimates() const;
    /// Issue weeks with an estimate from `source`, ascending.
    std::vector<EpiWeek> issues(const std::string& source) const;
    std::size_t size() const;

private:
    std::map<std::string, std::map<EpiWeek, WeakEstimate>> by_source_;
};

/// Walks issue weeks in order from the ledger start through `through`
/// (default: last_issue) and stores every weak estimate a source can produce
/// with the data reported by then. Throws InsufficientData if an enabled
/// source never produces one.
WeakLedger build_weak_ledger(const BacktestConfig& config, const Panel& panel,
                             std::optional<EpiWeek> through = std::nullopt);

/// Stacking design for one (issue, horizon): row t' holds the weak estimates
/// issued at t', its target is the first-release CDC value for t' - 1 + h,
/// and only targets first reported by `issue` qualify.
struct DesignMatrix {
    EpiWeek issue;
    int horizon = 0;
    std::vector<std::string> features;
    std::vector<EpiWeek> row_issues;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index rows() const { return X.rows(); }
};

/// Throws InsufficientData when fewer than `min_rows` rows qualify.
DesignMatrix build_design_matrix(const WeakLedger& ledger, const std::vector<std::string>& features,
                                 const VintagedSeries& cdc, int horizon, EpiWeek issue, int cdc_lag_weeks,
                                 int min_rows);

struct PredictionRecord {
    EpiWeek issue_week;
    int horizon = 0;
    std::string model;
    EpiWeek target_week;
    double value = 0.0;
    int n_training_rows = 0;
};

/// A (issue, horizon, model) cell that produced no record.
struct IssueFailure {
    EpiWeek issue_week;
    int horizon = 0;
    std::string model;
    std::string reason;
};

struct PredictionLedger {
    std::vector<PredictionRecord> records; // canonical (issue, horizon, model) order
    std::vector<WeakEstimate> weak_estimates;
    std::vector<IssueFailure> failures;
    BacktestConfig config;
};

/// Trains one stacking method on `design` and predicts `current` (unclipped).
/// Hyperparameters are re-selected by blocked CV on the design rows.
double ensemble_predict(Method method, const DesignMatrix& design, const Eigen::VectorXd& current,
                        const BacktestConfig& config);

/// Direct AR3 baseline for horizon h: regress the first-release CDC value of
/// t' - 1 + h on the three newest CDC values known at t'. Returns the
/// prediction and the number of training rows.
std::pair<double, int> ar3_predict(const VintagedSeries& cdc, EpiWeek issue, int horizon, int cdc_lag_weeks);

/// All records for one issue week; failed cells go to `failures`.
std::vector<PredictionRecord> run_issue(const BacktestConfig& config, const Panel& panel, const WeakLedger& ledger,
                                        EpiWeek issue, std::vector<IssueFailure>* failures = nullptr);

/// Weak ledger, then every issue from first_issue through last_issue. Weak
/// estimates issued in that span are also recorded as horizon-0 predictions
/// under their source id.
PredictionLedger run_backtest(const BacktestConfig& config, const Panel& panel);

void sort_records(std::vector<PredictionRecord>& records);

} // namespace flucast
