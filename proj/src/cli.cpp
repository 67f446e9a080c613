#include "flucast/cli.hpp"

#include "flucast/backtest.hpp"
#include "flucast/config.hpp"
#include "flucast/io.hpp"
#include "flucast/metrics.hpp"
#include "flucast/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <ostream>

namespace flucast {

namespace {

std::pair<EpiWeek, EpiWeek> parse_week_range(const std::string& text)
{
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        throw ValidationError("--weeks must look like YYYY-Www..YYYY-Www");
    }
    const EpiWeek a = epiweek_from_label(text.substr(0, dots));
    const EpiWeek b = epiweek_from_label(text.substr(dots + 2));
    if (b < a) {
        throw ValidationError("--weeks start " + to_label(a) + " is after end " + to_label(b));
    }
    return {a, b};
}

// Evaluation over the configured range, or every target week in the run.
EvaluationReport evaluate_run(const PredictionLedger& ledger, const Snapshot& cdc_final, std::ostream& err)
{
    const BacktestConfig& c = ledger.config;
    const EpiWeek start = c.evaluation_start.value_or(horizon_target(c.first_issue, 0));
    const EpiWeek end = c.evaluation_end.value_or(horizon_target(c.last_issue, kHorizonCount - 1));
    try {
        return evaluate_ledger(ledger.records, cdc_final, start, end);
    } catch (const ValidationError& e) {
        err << "warning: " << e.what() << '\n';
        return {};
    }
}

int run_synth(const std::string& config_path, const std::string& out_dir, std::ostream& out)
{
    const SynthConfig cfg = load_synth_config(config_path);
    write_synth_panel(synth_panel(cfg), out_dir);
    out << "wrote synthetic panel to " << out_dir << '\n';
    return kExitOk;
}

int run_backtest_cmd(const std::string& panel_path, const std::string& config_path, const std::string& out_dir,
                     std::ostream& out, std::ostream& err)
{
    const BacktestConfig config = load_config(config_path);
    const Panel panel = load_panel(panel_path, config);
    const PredictionLedger ledger = run_backtest(config, panel);
    const Snapshot cdc_final = panel.cdc.final();
    const EvaluationReport report = evaluate_run(ledger, cdc_final, err);
    write_ledger_csv(ledger, report, cdc_final, out_dir);
    out << ledger.records.size() << " predictions, " << ledger.failures.size() << " failed cells, written to "
        << out_dir << '\n';
    return kExitOk;
}

int run_evaluate(const std::string& ledger_dir, const std::string& weeks, const std::string& out_dir,
                 std::ostream& out)
{
    const auto [start, end] = parse_week_range(weeks);
    const std::filesystem::path dir = ledger_dir;
    std::ifstream preds(dir / "predictions.csv", std::ios::binary);
    std::ifstream truth(dir / "cdc_final.csv", std::ios::binary);
    if (!preds || !truth) {
        throw ValidationError("ledger directory needs predictions.csv and cdc_final.csv: " + ledger_dir);
    }
    const auto records = read_predictions_csv(preds);
    const Snapshot cdc_final{end, read_week_values_csv(truth)};
    const EvaluationReport report = evaluate_ledger(records, cdc_final, start, end);
    write_report_csv(report, out_dir);
    out << report.rows.size() << " metric rows written to " << out_dir << '\n';
    return kExitOk;
}

int run_nowcast(const std::string& panel_path, const std::string& config_path, const std::string& issue_label,
                std::ostream& out)
{
    const BacktestConfig config = load_config(config_path);
    const EpiWeek issue = epiweek_from_label(issue_label);
    const Panel panel = load_panel(panel_path, config);
    const WeakOptions opts{config.cdc_lag_weeks, config.cv_folds};
    // fail fast, naming the source, before the expensive ledger walk
    for (const auto& spec : config.sources) {
        (void)weak_nowcast(spec, panel, issue, opts);
    }
    const WeakLedger weak = build_weak_ledger(config, panel, issue);
    std::vector<IssueFailure> failures;
    auto records = run_issue(config, panel, weak, issue, &failures);
    sort_records(records);

    using nlohmann::ordered_json;
    ordered_json j;
    j["issue"] = to_label(issue);
    ordered_json weak_json = ordered_json::array();
    for (const auto& spec : config.sources) {
        const WeakEstimate* e = weak.find(spec.id, issue);
        weak_json.push_back({{"source", spec.id},
                             {"target", to_label(e->target_week)},
                             {"value", e->value},
                             {"n_training_rows", e->n_train}});
    }
    j["weak_estimates"] = std::move(weak_json);
    ordered_json horizons = ordered_json::array();
    for (int h = 0; h < kHorizonCount; ++h) {
        ordered_json preds = ordered_json::object();
        for (const auto& r : records) {
            if (r.horizon == h) {
                preds[r.model] = r.value;
            }
        }
        horizons.push_back({{"horizon", h},
                            {"label", std::string(horizon_label(h))},
                            {"target", to_label(horizon_target(issue, h))},
                            {"predictions", std::move(preds)}});
    }
    j["horizons"] = std::move(horizons);
    ordered_json fails = ordered_json::array();
    for (const auto& f : failures) {
        fails.push_back({{"horizon", f.horizon}, {"model", f.model}, {"reason", f.reason}});
    }
    j["failures"] = std::move(fails);
    out << j.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ensemble %ILI nowcasting and backtesting"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::string panel_path;
    std::string ledger_dir;
    std::string weeks;
    std::string issue;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel");
    synth->add_option("--config", config_path, "Synthetic panel JSON config")->required();
    synth->add_option("--out", out_dir, "Output directory")->required();

    auto* backtest = app.add_subcommand("backtest", "Run the expanding-window backtest");
    backtest->add_option("--panel", panel_path, "Panel CSV")->required();
    backtest->add_option("--config", config_path, "Backtest JSON config")->required();
    backtest->add_option("--out", out_dir, "Output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score a ledger over a week range");
    evaluate->add_option("--ledger", ledger_dir, "Directory written by backtest")->required();
    evaluate->add_option("--weeks", weeks, "Target weeks, START..END")->required();
    evaluate->add_option("--out", out_dir, "Output directory")->required();

    auto* nowcast = app.add_subcommand("nowcast", "Four-horizon predictions for one issue week, as JSON");
    nowcast->add_option("--panel", panel_path, "Panel CSV")->required();
    nowcast->add_option("--config", config_path, "Backtest JSON config")->required();
    nowcast->add_option("--issue", issue, "Issue week YYYY-Www")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kExitValidation;
    }

    try {
        if (*synth) {
            return run_synth(config_path, out_dir, out);
        }
        if (*backtest) {
            return run_backtest_cmd(panel_path, config_path, out_dir, out, err);
        }
        if (*evaluate) {
            return run_evaluate(ledger_dir, weeks, out_dir, out);
        }
        return run_nowcast(panel_path, config_path, issue, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace flucast
