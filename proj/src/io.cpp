#include "flucast/io.hpp"

#include "flucast/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

namespace flucast {

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

bool next_line(std::istream& in, std::string& line)
{
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

// Free-text fields: quote when they would break the comma layout.
std::string csv_text(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c == '"' ? "\"\"" : std::string(1, c);
    }
    return out + "\"";
}

int parse_int(std::string_view text, std::string_view what)
{
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

} // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "";
    }
    if (v == 0.0) {
        return "0"; // also folds -0
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_number(std::string_view text, std::string_view what)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("bad " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

int LagTable::lag_for(const std::string& source) const
{
    const auto it = lags.find(source);
    return it == lags.end() ? fallback : it->second;
}

LagTable default_lag_table()
{
    return {{{"cdc", 2}}, 1};
}

Unit unit_for_source(const std::string& source)
{
    return source == "cdc" || source == "ath" || source == "fny" || source == "gft" ? Unit::percent_ili
                                                                                     : Unit::raw_volume;
}

std::map<std::string, VintagedSeries> read_panel_csv(std::istream& in, const LagTable& lags)
{
    std::string line;
    if (!next_line(in, line) || line != kPanelHeader) {
        throw ValidationError(std::string("panel header must be exactly '") + kPanelHeader + "'");
    }
    std::map<std::string, std::vector<VintagedObservation>> rows;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 4) {
            throw ValidationError(where(line_no) + "expected 4 fields");
        }
        const std::string source(f[0]);
        if (source.empty()) {
            throw ValidationError(where(line_no) + "empty source");
        }
        try {
            const EpiWeek week = epiweek_from_label(f[1]);
            const double value = parse_number(f[2], "value");
            if (!std::isfinite(value) || value < 0.0) {
                throw ValidationError("value must be finite and non-negative, got '" + std::string(f[2]) + "'");
            }
            const EpiWeek report = f[3].empty() ? week + lags.lag_for(source) : epiweek_from_label(f[3]);
            if (report < week) {
                throw ValidationError("report_epiweek precedes epiweek");
            }
            rows[source].push_back({week, report, value});
        } catch (const ValidationError& e) {
            throw ValidationError(where(line_no) + e.what());
        }
    }
    std::map<std::string, VintagedSeries> out;
    for (auto& [source, obs] : rows) {
        out.emplace(source, VintagedSeries(source, unit_for_source(source), std::move(obs)));
    }
    return out;
}

std::map<std::string, VintagedSeries> load_panel_csv(const std::filesystem::path& path, const LagTable& lags)
{
    auto in = open_in(path);
    return read_panel_csv(in, lags);
}

void write_panel_csv(std::ostream& out, const std::map<std::string, VintagedSeries>& series)
{
    out << kPanelHeader << '\n';
    for (const auto& [source, s] : series) {
        for (const auto& obs : s.observations()) {
            out << source << ',' << to_label(obs.target_week) << ',' << format_number(obs.value) << ','
                << to_label(obs.report_week) << '\n';
        }
    }
}

QueryPanel read_query_csv(std::istream& in, const std::string& source_id, int lag)
{
    std::string line;
    if (!next_line(in, line)) {
        throw ValidationError("query CSV is empty");
    }
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "epiweek") {
        throw ValidationError("query CSV header must be 'epiweek,<query>,...'");
    }
    QueryPanel panel;
    std::set<std::string> names;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty() || !names.insert(std::string(header[j])).second) {
            throw ValidationError("query CSV: empty or repeated column name");
        }
        panel.names.emplace_back(header[j]);
    }
    std::vector<std::map<EpiWeek, double>> columns(panel.names.size());
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != header.size()) {
            throw ValidationError(where(line_no) + "expected " + std::to_string(header.size()) + " fields");
        }
        try {
            const EpiWeek week = epiweek_from_label(f[0]);
            for (std::size_t j = 1; j < f.size(); ++j) {
                const double v = parse_number(f[j], "query value");
                if (!std::isfinite(v) || v < 0.0) {
                    throw ValidationError("query value must be finite and non-negative");
                }
                if (!columns[j - 1].emplace(week, v).second) {
                    throw ValidationError("repeated week " + to_label(week));
                }
            }
        } catch (const ValidationError& e) {
            throw ValidationError(where(line_no) + e.what());
        }
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
        panel.columns.push_back(
            VintagedSeries::unrevised(source_id + ":" + panel.names[j], Unit::raw_volume, columns[j], lag));
    }
    return panel;
}

QueryPanel load_query_csv(const std::filesystem::path& path, const std::string& source_id, int lag)
{
    auto in = open_in(path);
    return read_query_csv(in, source_id, lag);
}

void write_query_csv(std::ostream& out, const QueryPanel& panel)
{
    out << "epiweek";
    for (const auto& name : panel.names) {
        out << ',' << name;
    }
    out << '\n';
    if (panel.columns.empty()) {
        return;
    }
    const Snapshot first = panel.columns.front().final();
    std::vector<Snapshot> finals;
    for (const auto& col : panel.columns) {
        finals.push_back(col.final());
    }
    for (const auto& [week, unused] : first.values) {
        (void)unused;
        out << to_label(week);
        for (const auto& snap : finals) {
            const auto v = snap.at(week);
            if (!v) {
                throw ValidationError("query panel columns cover different weeks");
            }
            out << ',' << format_number(*v);
        }
        out << '\n';
    }
}

Panel assemble_panel(std::map<std::string, VintagedSeries> series, std::map<std::string, QueryPanel> queries)
{
    const auto it = series.find("cdc");
    if (it == series.end()) {
        throw ValidationError("panel has no 'cdc' rows");
    }
    Panel panel;
    panel.cdc = std::move(it->second);
    series.erase(it);
    panel.sources = std::move(series);
    panel.query_panels = std::move(queries);
    return panel;
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRecord>& records)
{
    out << kPredictionsHeader << '\n';
    for (const auto& r : records) {
        out << to_label(r.issue_week) << ',' << r.horizon << ',' << r.model << ',' << to_label(r.target_week) << ','
            << format_number(r.value) << ',' << r.n_training_rows << '\n';
    }
}

std::vector<PredictionRecord> read_predictions_csv(std::istream& in)
{
    std::string line;
    if (!next_line(in, line) || line != kPredictionsHeader) {
        throw ValidationError(std::string("predictions header must be exactly '") + kPredictionsHeader + "'");
    }
    std::vector<PredictionRecord> records;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 6) {
            throw ValidationError(where(line_no) + "expected 6 fields");
        }
        try {
            PredictionRecord r;
            r.issue_week = epiweek_from_label(f[0]);
            r.horizon = parse_int(f[1], "horizon");
            (void)horizon_label(r.horizon);
            r.model = std::string(f[2]);
            r.target_week = epiweek_from_label(f[3]);
            r.value = parse_number(f[4], "value");
            r.n_training_rows = parse_int(f[5], "n_training_rows");
            if (r.target_week != horizon_target(r.issue_week, r.horizon)) {
                throw ValidationError("target week does not match issue and horizon");
            }
            records.push_back(std::move(r));
        } catch (const ValidationError& e) {
            throw ValidationError(where(line_no) + e.what());
        }
    }
    return records;
}

void write_errors_csv(std::ostream& out, const EvaluationReport& report)
{
    out << kErrorsHeader << '\n';
    for (const auto& e : report.errors) {
        out << e.horizon << ',' << e.model << ',' << to_label(e.target_week) << ',' << format_number(e.observed) << ','
            << format_number(e.predicted) << ',' << format_number(e.relative_error) << '\n';
    }
}

void write_metrics_csv(std::ostream& out, const EvaluationReport& report)
{
    out << kMetricsHeader << '\n';
    for (const auto& row : report.rows) {
        out << row.horizon << ',' << row.model;
        for (const double v : row.values) {
            out << ',' << format_number(v);
        }
        out << ',' << row.n << ',' << format_number(row.mean_ape) << ',';
        std::string best;
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            if (row.best[m]) {
                best += best.empty() ? "" : ";";
                best += kMetricNames[m];
            }
        }
        out << best << '\n';
    }
}

void write_failures_csv(std::ostream& out, const std::vector<IssueFailure>& failures)
{
    out << "issue_epiweek,horizon,model,reason\n";
    for (const auto& f : failures) {
        out << to_label(f.issue_week) << ',' << f.horizon << ',' << f.model << ',' << csv_text(f.reason) << '\n';
    }
}

void write_week_values_csv(std::ostream& out, const std::map<EpiWeek, double>& values)
{
    out << "epiweek,value\n";
    for (const auto& [week, v] : values) {
        out << to_label(week) << ',' << format_number(v) << '\n';
    }
}

std::map<EpiWeek, double> read_week_values_csv(std::istream& in)
{
    std::string line;
    if (!next_line(in, line) || line != "epiweek,value") {
        throw ValidationError("header must be exactly 'epiweek,value'");
    }
    std::map<EpiWeek, double> out;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 2) {
            throw ValidationError(where(line_no) + "expected 2 fields");
        }
        try {
            if (!out.emplace(epiweek_from_label(f[0]), parse_number(f[1], "value")).second) {
                throw ValidationError("repeated week");
            }
        } catch (const ValidationError& e) {
            throw ValidationError(where(line_no) + e.what());
        }
    }
    return out;
}

void write_report_csv(const EvaluationReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "errors.csv");
        write_errors_csv(out, report);
    }
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, report);
}

void write_ledger_csv(const PredictionLedger& ledger, const EvaluationReport& report, const Snapshot& cdc_final,
                      const std::filesystem::path& dir)
{
    if (ledger.records.empty()) {
        throw ValidationError("ledger has no records");
    }
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "predictions.csv");
        write_predictions_csv(out, ledger.records);
    }
    {
        auto out = open_out(dir / "failures.csv");
        write_failures_csv(out, ledger.failures);
    }
    {
        auto out = open_out(dir / "cdc_final.csv");
        write_week_values_csv(out, cdc_final.values);
    }
    {
        auto out = open_out(dir / "config.json");
        out << config_to_json(ledger.config);
    }
    write_report_csv(report, dir);
}

} // namespace flucast
