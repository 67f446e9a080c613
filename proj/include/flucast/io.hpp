#pragma once

#include "flucast/backtest.hpp"
#include "flucast/metrics.hpp"
#include "flucast/weak_predictors.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace flucast {

inline constexpr const char* kPanelHeader = "source,epiweek,value,report_epiweek";
inline constexpr const char* kPredictionsHeader = "issue_epiweek,horizon,model,target_epiweek,value,n_training_rows";
inline constexpr const char* kErrorsHeader = "horizon,model,target_epiweek,observed,predicted,relative_error";
inline constexpr const char* kMetricsHeader =
    "horizon,model,corr,rmse,rmspe,mape_max,hit_rate,n,mean_ape,best";

/// Shortest decimal text that parses back to the same double; "" for NaN.
std::string format_number(double v);

/// Strict decimal parse of a whole field.
double parse_number(std::string_view text, std::string_view what);

/// Reporting lag per source id, used when a row leaves report_epiweek empty.
struct LagTable {
    std::map<std::string, int> lags;
    int fallback = 1;

    int lag_for(const std::string& source) const;
};

/// Default lags: cdc 2, every other source 1.
LagTable default_lag_table();

Unit unit_for_source(const std::string& source);

/// Long-format panel: one VintagedSeries per source. Throws ValidationError on
/// a bad header, label, value, or a repeated (source, epiweek, report) row.
std::map<std::string, VintagedSeries> read_panel_csv(std::istream& in, const LagTable& lags);
std::map<std::string, VintagedSeries> load_panel_csv(const std::filesystem::path& path, const LagTable& lags);

/// Rows ordered by (source, epiweek, report_epiweek); report always written.
void write_panel_csv(std::ostream& out, const std::map<std::string, VintagedSeries>& series);

/// Wide query CSV "epiweek,q001,...". Every column is unrevised with `lag`.
QueryPanel read_query_csv(std::istream& in, const std::string& source_id, int lag);
QueryPanel load_query_csv(const std::filesystem::path& path, const std::string& source_id, int lag);
void write_query_csv(std::ostream& out, const QueryPanel& panel);

/// Splits the "cdc" series off as the target. Throws if it is absent.
Panel assemble_panel(std::map<std::string, VintagedSeries> series, std::map<std::string, QueryPanel> queries = {});

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_predictions_csv(std::istream& in);

void write_errors_csv(std::ostream& out, const EvaluationReport& report);
void write_metrics_csv(std::ostream& out, const EvaluationReport& report);
void write_failures_csv(std::ostream& out, const std::vector<IssueFailure>& failures);

/// Two columns "epiweek,value".
void write_week_values_csv(std::ostream& out, const std::map<EpiWeek, double>& values);
std::map<EpiWeek, double> read_week_values_csv(std::istream& in);

/// predictions.csv, errors.csv, metrics.csv, failures.csv, config.json and
/// cdc_final.csv (the truth the metrics were computed against).
void write_ledger_csv(const PredictionLedger& ledger, const EvaluationReport& report, const Snapshot& cdc_final,
                      const std::filesystem::path& dir);

/// errors.csv and metrics.csv only.
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& dir);

} // namespace flucast
