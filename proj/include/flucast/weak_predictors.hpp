#pragma once

#include "flucast/errors.hpp"
#include "flucast/regressors/lasso.hpp"
#include "flucast/vintage.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flucast {

/// A source has no observation for the week a nowcast needs.
class MissingObservation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Wide query-volume panel (one VintagedSeries per query column).
struct QueryPanel {
    std::vector<std::string> names;
    std::vector<VintagedSeries> columns;
};

/// Everything the pipeline reads: revised CDC %ILI plus the raw sources.
struct Panel {
    VintagedSeries cdc;
    std::map<std::string, VintagedSeries> sources;
    std::map<std::string, QueryPanel> query_panels;
};

enum class SourceKind { linear_map, multiquery_lasso, arx_exog, passthrough };
enum class TrainingMode { expanding, fixed_window };

SourceKind parse_source_kind(std::string_view name);
std::string_view to_string(SourceKind kind);
TrainingMode parse_training_mode(std::string_view name);
std::string_view to_string(TrainingMode mode);

/// Fewest training rows each kind will fit on.
int default_min_history(SourceKind kind);

struct SourceSpec {
    std::string id;
    SourceKind kind = SourceKind::linear_map;
    int lag_weeks = 1;
    TrainingMode training = TrainingMode::expanding;
    int window_weeks = 104; // fixed_window: weeks of source history used
    int min_history = 0;    // 0 means default_min_history(kind)

    int effective_min_history() const { return min_history > 0 ? min_history : default_min_history(kind); }
};

struct LinearMapFit {
    double slope = 0.0;
    double intercept = 0.0;
    int n_train = 0;
};

/// Ordinary least squares y ~ a*x + b. Needs >= 3 pairs and a non-constant x.
LinearMapFit fit_linear_map(std::span<const double> x, std::span<const double> y);
double predict_linear_map(const LinearMapFit& fit, double x);

inline constexpr double kArxRidge = 1e-8;
inline constexpr int kArxMinRows = 8;

struct ArxFit {
    double intercept = 0.0;
    std::array<double, 3> lag_coeffs{};
    std::optional<double> exog_coeff;
    int horizon = 0;
};

/// Least squares of `targets` on [1, lag1, lag2, lag3, (exog)] with a 1e-8
/// ridge on the normal-equation diagonal. `lags` is n x 3, most recent first.
ArxFit fit_arx(const Eigen::MatrixXd& lags, const std::optional<Eigen::VectorXd>& exog,
               const Eigen::VectorXd& targets, int horizon);

double predict_arx(const ArxFit& fit, const std::array<double, 3>& lags, std::optional<double> exog);

struct GtOptions {
    int cv_folds = 5;
    std::optional<double> lambda; // skips cross-validation when set
};

inline constexpr int kGtMinRows = 10;

/// LASSO (signed coefficients) from query volumes to %ILI on the identity
/// scale, lambda picked by blocked CV over the lambda path.
LassoFit<double> gt_multiquery_fit(const Eigen::MatrixXd& queries, const Eigen::VectorXd& targets,
                                   const GtOptions& opts = {});

struct WeakEstimate {
    std::string source_id;
    EpiWeek issue_week;
    EpiWeek target_week;
    double value = 0.0;
    int n_train = 0;
};

struct WeakOptions {
    int cdc_lag_weeks = 2;
    int cv_folds = 5;
};

/// Out-of-sample estimate of CDC %ILI for week issue-1 from one source, using
/// only data reported by `issue`. Models are trained against first-release
/// CDC values.
///
/// Throws MissingObservation when the source lacks its latest value and
/// InsufficientData when there are too few training rows.
WeakEstimate weak_nowcast(const SourceSpec& spec, const Panel& panel, EpiWeek issue, const WeakOptions& opts = {});

} // namespace flucast
