#include "flucast/metrics.hpp"

#include <limits>
#include <map>
#include <set>

namespace flucast {

namespace {

template <class F>
double or_nan(F&& f)
{
    try {
        return f();
    } catch (const ValidationError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

EvaluationReport evaluate_ledger(const std::vector<PredictionRecord>& records, const Snapshot& cdc_final, EpiWeek start,
                                 EpiWeek end)
{
    if (end < start) {
        throw ValidationError("evaluate: start week is after end week");
    }
    // horizon -> model -> target week -> prediction
    std::map<int, std::map<std::string, std::map<EpiWeek, double>>> table;
    for (const auto& r : records) {
        if (start <= r.target_week && r.target_week <= end) {
            table[r.horizon][r.model][r.target_week] = r.value;
        }
    }

    EvaluationReport report;
    for (const auto& [h, models] : table) {
        std::set<EpiWeek> common;
        bool first = true;
        for (const auto& [model, preds] : models) {
            std::set<EpiWeek> weeks;
            for (const auto& [week, v] : preds) {
                if ((first || common.count(week)) && cdc_final.at(week)) {
                    weeks.insert(week);
                }
            }
            common = std::move(weeks);
            first = false;
        }
        if (common.empty()) {
            continue;
        }
        const auto n = static_cast<Eigen::Index>(common.size());
        Eigen::VectorXd y(n);
        {
            Eigen::Index i = 0;
            for (const EpiWeek w : common) {
                y(i++) = *cdc_final.at(w);
            }
        }
        const std::size_t first_row = report.rows.size();
        for (const auto& [model, preds] : models) {
            Eigen::VectorXd x(n);
            Eigen::Index i = 0;
            for (const EpiWeek w : common) {
                x(i) = preds.at(w);
                if (y(i) > 0.0) {
                    report.errors.push_back({h, model, w, y(i), x(i), std::abs(y(i) - x(i)) / y(i)});
                }
                ++i;
            }
            MetricRow row;
            row.horizon = h;
            row.model = model;
            row.n = common.size();
            row.values = {or_nan([&] { return pearson(y, x); }), or_nan([&] { return rmse(y, x); }),
                          or_nan([&] { return rmspe(y, x); }), or_nan([&] { return mape_max(y, x); }),
                          or_nan([&] { return hit_rate(y, x); })};
            row.mean_ape = or_nan([&] { return mean_ape(y, x); });
            report.rows.push_back(std::move(row));
        }
        // best per column: highest corr and hit rate, lowest error metrics
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            const bool higher = m == 0 || m == 4;
            double best = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t k = first_row; k < report.rows.size(); ++k) {
                const double v = report.rows[k].values[m];
                if (std::isnan(v)) {
                    continue;
                }
                if (std::isnan(best) || (higher ? v > best : v < best)) {
                    best = v;
                }
            }
            for (std::size_t k = first_row; k < report.rows.size(); ++k) {
                report.rows[k].best[m] = !std::isnan(best) && report.rows[k].values[m] == best;
            }
        }
    }
    if (report.rows.empty()) {
        throw ValidationError("evaluate: no target week in " + to_label(start) + ".." + to_label(end) +
                              " has predictions from every model and an observed value");
    }
    return report;
}

} // namespace flucast
