#include "flucast/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace flucast {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!keys.count(k)) {
            throw ValidationError(where + ": unknown key '" + k + "'");
        }
    }
}

EpiWeek week_field(const json& obj, const char* key)
{
    if (!obj.contains(key) || !obj.at(key).is_string()) {
        throw ValidationError(std::string("config: '") + key + "' must be an epiweek label");
    }
    return epiweek_from_label(obj.at(key).get<std::string>());
}

int int_field(const json& obj, const char* key, int fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_number_integer()) {
        throw ValidationError(std::string("config: '") + key + "' must be an integer");
    }
    return obj.at(key).get<int>();
}

SourceSpec parse_source(const json& s)
{
    if (!s.is_object()) {
        throw ValidationError("config: each source must be an object");
    }
    reject_unknown(s, {"id", "kind", "lag_weeks", "training", "window_weeks", "min_history"}, "config source");
    if (!s.contains("id") || !s.at("id").is_string() || !s.contains("kind") || !s.at("kind").is_string()) {
        throw ValidationError("config: each source needs string 'id' and 'kind'");
    }
    SourceSpec spec;
    spec.id = s.at("id").get<std::string>();
    spec.kind = parse_source_kind(s.at("kind").get<std::string>());
    spec.lag_weeks = int_field(s, "lag_weeks", 1);
    if (s.contains("training")) {
        spec.training = parse_training_mode(s.at("training").get<std::string>());
    }
    spec.window_weeks = int_field(s, "window_weeks", spec.window_weeks);
    spec.min_history = int_field(s, "min_history", 0);
    return spec;
}

} // namespace

BacktestConfig parse_config_json(std::string_view text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config: top level must be an object");
    }
    reject_unknown(j,
                   {"sources", "cdc_lag_weeks", "first_issue", "last_issue", "ledger_start", "min_training_rows",
                    "ensemble_methods", "cv", "seed", "evaluation", "gt_queries", "adaboost"},
                   "config");
    try {
        BacktestConfig c;
        if (!j.contains("sources") || !j.at("sources").is_array()) {
            throw ValidationError("config: 'sources' must be an array");
        }
        for (const auto& s : j.at("sources")) {
            c.sources.push_back(parse_source(s));
        }
        c.cdc_lag_weeks = int_field(j, "cdc_lag_weeks", c.cdc_lag_weeks);
        c.first_issue = week_field(j, "first_issue");
        c.last_issue = week_field(j, "last_issue");
        if (j.contains("ledger_start")) {
            c.ledger_start = week_field(j, "ledger_start");
        }
        c.min_training_rows = int_field(j, "min_training_rows", c.min_training_rows);
        if (j.contains("ensemble_methods")) {
            c.methods.clear();
            for (const auto& m : j.at("ensemble_methods")) {
                c.methods.push_back(parse_method(m.get<std::string>()));
            }
        }
        if (j.contains("cv")) {
            reject_unknown(j.at("cv"), {"folds"}, "config cv");
            c.cv_folds = int_field(j.at("cv"), "folds", c.cv_folds);
        }
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_unsigned()) {
                throw ValidationError("config: 'seed' must be a non-negative integer");
            }
            c.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("evaluation")) {
            const auto& e = j.at("evaluation");
            reject_unknown(e, {"start", "end"}, "config evaluation");
            if (e.contains("start")) {
                c.evaluation_start = week_field(e, "start");
            }
            if (e.contains("end")) {
                c.evaluation_end = week_field(e, "end");
            }
        }
        if (j.contains("gt_queries")) {
            std::filesystem::path p = j.at("gt_queries").get<std::string>();
            if (p.is_relative() && !base_dir.empty()) {
                // absolute, so the config echo re-runs from any directory
                p = std::filesystem::absolute(base_dir / p);
            }
            c.gt_queries = p.lexically_normal().string();
        }
        if (j.contains("adaboost")) {
            const auto& a = j.at("adaboost");
            reject_unknown(a, {"rounds", "max_depth"}, "config adaboost");
            c.adaboost_rounds = int_field(a, "rounds", c.adaboost_rounds);
            c.adaboost_depth = int_field(a, "max_depth", c.adaboost_depth);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

BacktestConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str(), path.parent_path());
}

std::string config_to_json(const BacktestConfig& c)
{
    ordered_json j;
    ordered_json sources = ordered_json::array();
    for (const auto& s : c.sources) {
        ordered_json o;
        o["id"] = s.id;
        o["kind"] = std::string(to_string(s.kind));
        o["lag_weeks"] = s.lag_weeks;
        o["training"] = std::string(to_string(s.training));
        o["window_weeks"] = s.window_weeks;
        o["min_history"] = s.min_history;
        sources.push_back(std::move(o));
    }
    j["sources"] = std::move(sources);
    j["cdc_lag_weeks"] = c.cdc_lag_weeks;
    j["first_issue"] = to_label(c.first_issue);
    j["last_issue"] = to_label(c.last_issue);
    if (c.ledger_start) {
        j["ledger_start"] = to_label(*c.ledger_start);
    }
    j["min_training_rows"] = c.min_training_rows;
    ordered_json methods = ordered_json::array();
    for (const Method m : c.methods) {
        methods.push_back(std::string(to_string(m)));
    }
    j["ensemble_methods"] = std::move(methods);
    j["cv"] = {{"folds", c.cv_folds}};
    j["seed"] = c.seed;
    ordered_json eval = ordered_json::object();
    if (c.evaluation_start) {
        eval["start"] = to_label(*c.evaluation_start);
    }
    if (c.evaluation_end) {
        eval["end"] = to_label(*c.evaluation_end);
    }
    j["evaluation"] = std::move(eval);
    if (c.gt_queries) {
        j["gt_queries"] = *c.gt_queries;
    }
    j["adaboost"] = {{"rounds", c.adaboost_rounds}, {"max_depth", c.adaboost_depth}};
    return j.dump(2) + "\n";
}

LagTable lag_table(const BacktestConfig& config)
{
    LagTable t = default_lag_table();
    t.lags["cdc"] = config.cdc_lag_weeks;
    for (const auto& s : config.sources) {
        t.lags[s.id] = s.lag_weeks;
    }
    return t;
}

Panel load_panel(const std::filesystem::path& panel_csv, const BacktestConfig& config)
{
    std::map<std::string, QueryPanel> queries;
    for (const auto& s : config.sources) {
        if (s.kind != SourceKind::multiquery_lasso) {
            continue;
        }
        if (!config.gt_queries) {
            throw ValidationError("source '" + s.id + "' is multiquery_lasso but the config has no 'gt_queries'");
        }
        queries.emplace(s.id, load_query_csv(*config.gt_queries, s.id, s.lag_weeks));
    }
    return assemble_panel(load_panel_csv(panel_csv, lag_table(config)), std::move(queries));
}

} // namespace flucast
