// Acceptance driver: one PASS/FAIL line per criterion, exit status 0 only if
// all of them pass.

#include "flucast/backtest.hpp"
#include "flucast/config.hpp"
#include "flucast/io.hpp"
#include "flucast/metrics.hpp"
#include "flucast/regressors/adaboost.hpp"
#include "flucast/regressors/lasso.hpp"
#include "flucast/regressors/svr.hpp"
#include "flucast/synth.hpp"
#include "oracles/adaboost_reference.hpp"
#include "oracles/lasso_pgd.hpp"
#include "oracles/svr_kkt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace flucast;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = FLUCAST_SOURCE_DIR;

// Collects failed checks for one criterion; the first few are printed.
struct Verdict {
    int failures = 0;
    std::vector<std::string> notes;
    std::string summary;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            ++failures;
            if (notes.size() < 5) {
                notes.push_back(what);
            }
        }
    }
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<void(Verdict&)> body;
};

Eigen::VectorXd vec(std::initializer_list<double> xs)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (const double x : xs) {
        v(i++) = x;
    }
    return v;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool same(const PredictionRecord& a, const PredictionRecord& b)
{
    return a.issue_week == b.issue_week && a.horizon == b.horizon && a.model == b.model &&
           a.target_week == b.target_week && a.value == b.value && a.n_training_rows == b.n_training_rows;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("flucast_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// 1. metrics

void metric_oracles(Verdict& v)
{
    const auto y = vec({1, 2, 4});
    const auto x = vec({1.5, 2, 3});
    v.check(near(pearson(y, x), 1.0, 1e-6), "pearson affine example");
    v.check(near(pearson(vec({1, 2}), vec({2, 1})), -1.0, 1e-6), "pearson negative example");
    v.check(near(pearson(vec({1, 2, 3, 4}), vec({1, 2, 3, 5})), 6.5 / std::sqrt(5.0 * 8.75), 1e-9),
            "pearson hand evaluation");
    v.check(rmse(y, y) == 0.0, "rmse x=y");
    v.check(near(rmse(y, x), std::sqrt(1.25 / 3), 1e-6), "rmse example");
    v.check(rmse(vec({0}), vec({3})) == 3.0, "rmse single");
    v.check(near(rmspe(y, x), std::sqrt(0.3125 / 3) * 100, 1e-6), "rmspe example");
    v.check(near(mape_max(y, x), 50.0, 1e-6), "mape_max example");
    v.check(near(mape_max(vec({2}), vec({1})), 50.0, 1e-6), "mape_max single");
    v.check(hit_rate(vec({1, 2, 1}), vec({3, 4, 2})) == 100.0, "hit_rate both directions");
    v.check(hit_rate(vec({1, 1}), vec({2, 2})) == 100.0, "hit_rate zero change");
    v.check(hit_rate(vec({1, 2}), vec({2, 1})) == 0.0, "hit_rate opposite");

    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> U(0.2, 6.0);
    std::uniform_real_distribution<double> S(0.1, 10.0);
    std::uniform_int_distribution<int> len(2, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        Eigen::VectorXd a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a(i) = U(rng);
            b(i) = U(rng);
        }
        const double r = pearson(a, b);
        const double s = S(rng);
        const double c = U(rng) - 3.0;
        const Eigen::VectorXd ab = (s * b).array() + c;
        const Eigen::VectorXd aa = (s * a).array() + c;
        v.check(std::abs(pearson(a, ab) - r) < 1e-9 && std::abs(pearson(aa, b) - r) < 1e-9,
                "affine invariance, trial " + std::to_string(trial));
        v.check(rmse(a, a) == 0 && rmspe(a, a) == 0 && mape_max(a, a) == 0, "zero on equal inputs");
        v.check(rmse(a, b) > 0 && rmspe(a, b) > 0 && mape_max(a, b) > 0, "positive on distinct inputs");
        v.check(rmspe(a, b) <= mape_max(a, b) * (1 + 1e-12), "rmspe <= mape_max");
        const double shift = U(rng);
        const Eigen::VectorXd as = a.array() + shift;
        const Eigen::VectorXd bs = b.array() - shift;
        v.check(hit_rate(as, bs) == hit_rate(a, b), "hit_rate shift invariance");
    }
    v.summary = "worked examples and 1000 property instances";
}

// ---------------------------------------------------------------------------
// 2. non-negative LASSO

void lasso_vs_pgd(Verdict& v)
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> N;
    double worst_gap = -1e300;
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::MatrixXd X(40, 5);
        Eigen::VectorXd beta(5);
        for (int j = 0; j < 5; ++j) {
            beta(j) = N(rng);
            for (int i = 0; i < 40; ++i) {
                X(i, j) = N(rng) * (1.0 + j) + 0.5 * j;
            }
        }
        Eigen::VectorXd y = X * beta;
        for (int i = 0; i < 40; ++i) {
            y(i) += 0.5 * N(rng) + 2.0;
        }
        const double lmax = lasso_lambda_max(X, y);
        for (const double frac : {0.0, 0.01, 0.05, 0.2, 0.6}) {
            const double lambda = frac * lmax;
            const auto fit = lasso_cd_fit(X, y, lambda, true);
            const auto ref = oracle::lasso_pgd(X, y, lambda, true);
            const double f_cd = oracle::lasso_objective(X, y, fit.intercept, fit.coefficients, lambda);
            const double f_ref = oracle::lasso_objective(X, y, ref.intercept, ref.coef, lambda);
            worst_gap = std::max(worst_gap, f_cd - f_ref);
            v.check(f_cd <= f_ref + 1e-6, "trial " + std::to_string(trial) + " frac " + fmt(frac) + ": cd " +
                                              fmt(f_cd) + " vs oracle " + fmt(f_ref));
            v.check((fit.coefficients.array() >= 0.0).all(), "negative coefficient");
        }
        for (const double lambda : {lmax, 1.5 * lmax, 10.0 * lmax}) {
            const auto fit = lasso_cd_fit(X, y, lambda, true);
            v.check((fit.coefficients.array() == 0.0).all(), "nonzero coefficient at lambda >= lambda_max");
        }
    }
    v.summary = "1000 fits, worst objective gap cd - oracle = " + fmt(worst_gap);
}

// ---------------------------------------------------------------------------
// 3. SVR KKT

void svr_kkt(Verdict& v)
{
    std::mt19937_64 rng(303);
    std::normal_distribution<double> N;
    std::uniform_int_distribution<int> rows(20, 60);
    std::uniform_int_distribution<int> cols(1, 5);
    int converged = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rows(rng);
        const int p = cols(rng);
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) {
                X(i, j) = N(rng);
            }
            y(i) = std::sin(X(i, 0)) + 0.3 * X.row(i).sum() + 0.2 * N(rng);
        }
        SvrParams<double> prm;
        prm.kernel = trial % 2 ? Kernel::rbf : Kernel::linear;
        prm.C = std::pow(10.0, trial % 5 - 2);
        prm.epsilon = 0.02 * (trial % 7);
        prm.gamma = std::pow(2.0, trial % 5 - 3);
        SvrFit<double> fit;
        try {
            fit = svr_fit(X, y, prm);
        } catch (const NonConvergence&) {
            continue;
        }
        if (!fit.converged) {
            continue;
        }
        ++converged;
        const auto rep = oracle::svr_kkt_check(fit, y, 1e-3);
        v.check(rep.ok, "trial " + std::to_string(trial) + ": " + rep.why);
    }
    for (const double c : {0.0, 1.7, 42.0}) {
        Eigen::MatrixXd X(25, 2);
        X.setRandom();
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(25, c);
        for (const Kernel k : {Kernel::rbf, Kernel::linear}) {
            SvrParams<double> prm;
            prm.kernel = k;
            prm.C = 10.0;
            prm.epsilon = 0.1;
            const auto fit = svr_fit(X, y, prm);
            v.check(fit.bias == c, "constant target bias " + fmt(fit.bias) + " != " + fmt(c));
            v.check((fit.dual_coeffs.array() == 0.0).all(), "constant target has a nonzero dual");
        }
    }
    v.check(converged > 0, "no fit converged");
    v.summary = std::to_string(converged) + "/100 fits converged and checked, constant targets exact";
}

// ---------------------------------------------------------------------------
// 4. AdaBoost.R2

void adaboost_reference(Verdict& v)
{
    std::mt19937_64 rng(404);
    std::normal_distribution<double> N;
    std::uniform_int_distribution<int> depth(1, 4);
    std::uniform_int_distribution<int> rounds(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd X(30, 3);
        Eigen::VectorXd y(30);
        for (int i = 0; i < 30; ++i) {
            for (int j = 0; j < 3; ++j) {
                X(i, j) = N(rng);
            }
            y(i) = X(i, 0) * X(i, 0) + X(i, 1) - 0.5 * X(i, 2) + 0.3 * N(rng);
        }
        const int T = rounds(rng);
        const int d = depth(rng);
        AdaBoostTrace<double> trace;
        const auto fit = adaboost_r2_fit(X, y, T, d, &trace);
        const auto ref = oracle::adaboost_reference(X, y, T, d);
        const std::string tag = "trial " + std::to_string(trial);
        v.check(fit.learner_weights == ref.learner_weights, tag + ": committee weights differ");
        bool weights_equal = trace.sample_weights.size() == ref.weights_per_round.size();
        for (std::size_t t = 0; weights_equal && t < ref.weights_per_round.size(); ++t) {
            for (int i = 0; i < 30; ++i) {
                weights_equal = weights_equal && trace.sample_weights[t](i) == ref.weights_per_round[t][i];
            }
        }
        v.check(weights_equal, tag + ": per-round sample weights differ");
        for (int i = 0; i < 30; ++i) {
            const Eigen::VectorXd x = X.row(i).transpose();
            v.check(adaboost_predict(fit, x) == oracle::reference_predict(ref, x), tag + ": prediction differs");
        }
        const Eigen::VectorXd probe = Eigen::VectorXd::Constant(3, 0.25);
        v.check(adaboost_predict(fit, probe) == oracle::reference_predict(ref, probe), tag + ": off-sample");
    }

    std::uniform_int_distribution<int> len(1, 25);
    std::uniform_real_distribution<double> W(0.01, 5.0);
    std::uniform_int_distribution<int> small(0, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        Eigen::VectorXd vals(n), w(n);
        std::vector<double> vv(n), ww(n);
        for (int i = 0; i < n; ++i) {
            // small integers force ties
            vals(i) = trial % 2 ? small(rng) : N(rng);
            w(i) = trial % 3 ? W(rng) : 1.0;
            vv[i] = vals(i);
            ww[i] = w(i);
        }
        v.check(weighted_median(vals, w) == oracle::weighted_median_brute(vv, ww),
                "weighted median trial " + std::to_string(trial));
    }
    v.summary = "50 boosted committees and 1000 weighted medians match exactly";
}

// ---------------------------------------------------------------------------
// shared full runs on the bundled default panel

struct FullRun {
    PredictionLedger ledger;
    EvaluationReport report;
    double seconds = 0;
};

struct Bundle {
    BacktestConfig config;
    Panel panel;
    Snapshot cdc_final;
};

const Bundle& default_bundle()
{
    static const Bundle b = [] {
        Bundle out;
        out.config = load_config(kRoot / "configs" / "backtest_default.json");
        out.panel = load_panel(kRoot / "data" / "synthetic" / "panel.csv", out.config);
        out.cdc_final = out.panel.cdc.final();
        return out;
    }();
    return b;
}

FullRun full_run(const Panel& panel)
{
    const Bundle& b = default_bundle();
    const auto t0 = std::chrono::steady_clock::now();
    FullRun r;
    r.ledger = run_backtest(b.config, panel);
    r.report = evaluate_ledger(r.ledger.records, b.cdc_final, *b.config.evaluation_start, *b.config.evaluation_end);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

const FullRun& first_run()
{
    static const FullRun r = full_run(default_bundle().panel);
    return r;
}

// ---------------------------------------------------------------------------
// 5. no lookahead

VintagedSeries mutate_series(const VintagedSeries& s, const std::set<std::size_t>& picks, double factor)
{
    std::vector<VintagedObservation> obs(s.observations().begin(), s.observations().end());
    for (const std::size_t k : picks) {
        obs[k].value = obs[k].value * factor + 0.5;
    }
    return VintagedSeries(s.source_id(), s.unit(), std::move(obs));
}

void no_lookahead(Verdict& v)
{
    const Bundle& b = default_bundle();
    const FullRun& base = first_run();
    const EpiWeek t_star = b.config.first_issue + 40;

    // every series in the panel, addressed by a stable index
    std::vector<const VintagedSeries*> all;
    all.push_back(&b.panel.cdc);
    for (const auto& [id, s] : b.panel.sources) {
        all.push_back(&s);
    }
    for (const auto& [id, q] : b.panel.query_panels) {
        for (const auto& c : q.columns) {
            all.push_back(&c);
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t s = 0; s < all.size(); ++s) {
        const auto obs = all[s]->observations();
        for (std::size_t k = 0; k < obs.size(); ++k) {
            if (obs[k].report_week > t_star) {
                candidates.emplace_back(s, k);
            }
        }
    }
    std::mt19937_64 rng(5150);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(std::min<std::size_t>(20, candidates.size()));
    v.check(candidates.size() == 20, "fewer than 20 observations reported after t*");
    std::map<std::size_t, std::set<std::size_t>> picks;
    for (const auto& [s, k] : candidates) {
        picks[s].insert(k);
    }

    Panel m = b.panel;
    std::size_t index = 0;
    const auto apply = [&](VintagedSeries& s) {
        if (picks.count(index)) {
            s = mutate_series(s, picks[index], 2.5);
        }
        ++index;
    };
    apply(m.cdc);
    for (auto& [id, s] : m.sources) {
        apply(s);
    }
    for (auto& [id, q] : m.query_panels) {
        for (auto& c : q.columns) {
            apply(c);
        }
    }

    const FullRun mutated = full_run(m);
    std::map<std::tuple<EpiWeek, int, std::string>, const PredictionRecord*> after;
    for (const auto& r : mutated.ledger.records) {
        after[{r.issue_week, r.horizon, r.model}] = &r;
    }
    std::size_t compared = 0;
    std::size_t later_changed = 0;
    for (const auto& r : base.ledger.records) {
        const auto it = after.find({r.issue_week, r.horizon, r.model});
        if (r.issue_week <= t_star) {
            v.check(it != after.end() && same(r, *it->second),
                    "record " + to_label(r.issue_week) + " h" + std::to_string(r.horizon) + " " + r.model + " moved");
            ++compared;
        } else if (it == after.end() || !same(r, *it->second)) {
            ++later_changed;
        }
    }
    v.check(compared > 0, "no records issued by t*");
    v.summary = std::to_string(compared) + " records issued by " + to_label(t_star) + " unchanged; " +
                std::to_string(later_changed) + " later records moved; runs " + fmt(base.seconds) + " s + " +
                fmt(mutated.seconds) + " s";
}

// ---------------------------------------------------------------------------
// 6. expanding window on the historical calendar

void expanding_window(Verdict& v)
{
    const BacktestConfig c = load_config(kRoot / "configs" / "backtest_historical_calendar.json");
    const Panel p = load_panel(kRoot / "data" / "historical_calendar" / "panel.csv", c);
    const WeakLedger weak = build_weak_ledger(c, p);
    const auto features = c.feature_ids();
    Eigen::Index previous = -1;
    Eigen::Index first = -1;
    int issues = 0;
    for (EpiWeek t = c.first_issue; t <= c.last_issue; t = t + 1) {
        const DesignMatrix d = build_design_matrix(weak, features, p.cdc, 0, t, c.cdc_lag_weeks, c.min_training_rows);
        if (previous < 0) {
            first = d.rows();
            v.check(d.rows() == 31, "first issue " + to_label(t) + " has " + std::to_string(d.rows()) + " rows");
        } else {
            v.check(d.rows() == previous + 1, "issue " + to_label(t) + " has " + std::to_string(d.rows()) +
                                                  " rows after " + std::to_string(previous));
        }
        previous = d.rows();
        ++issues;
    }
    v.summary = std::to_string(issues) + " issues from " + to_label(c.first_issue) + ", rows " +
                std::to_string(first) + " to " + std::to_string(previous);
}

// ---------------------------------------------------------------------------
// 7. ensemble vs weak predictors and AR3

void ensemble_claim(Verdict& v)
{
    const Bundle& b = default_bundle();
    const FullRun& run = first_run();
    const EpiWeek from = b.config.last_issue + (-39);

    std::set<std::string> weak_ids;
    for (const auto& s : b.config.sources) {
        weak_ids.insert(s.id);
    }
    const std::vector<std::string> ensembles{"lasso_nn", "svr_rbf", "svr_linear", "adaboost"};

    // (h, model) -> target -> prediction, issues in the final 40 weeks
    std::map<std::pair<int, std::string>, std::map<EpiWeek, double>> preds;
    for (const auto& r : run.ledger.records) {
        if (r.issue_week >= from && r.issue_week <= b.config.last_issue && b.cdc_final.at(r.target_week)) {
            preds[{r.horizon, r.model}][r.target_week] = r.value;
        }
    }
    // RMSE over the targets every compared model covers at this horizon
    const auto score = [&](int h, const std::vector<std::string>& models) {
        std::map<std::string, double> out;
        std::set<EpiWeek> common;
        bool init = false;
        for (const auto& m : models) {
            std::set<EpiWeek> w;
            for (const auto& [t, x] : preds[{h, m}]) {
                w.insert(t);
            }
            if (!init) {
                common = w;
                init = true;
            } else {
                std::set<EpiWeek> both;
                std::set_intersection(common.begin(), common.end(), w.begin(), w.end(),
                                      std::inserter(both, both.begin()));
                common = both;
            }
        }
        for (const auto& m : models) {
            double sse = 0;
            for (const EpiWeek t : common) {
                const double e = preds[{h, m}][t] - *b.cdc_final.at(t);
                sse += e * e;
            }
            out[m] = common.empty() ? std::nan("") : std::sqrt(sse / static_cast<double>(common.size()));
        }
        return std::make_pair(out, common.size());
    };

    std::vector<std::string> h0 = ensembles;
    h0.push_back("ar3_baseline");
    h0.insert(h0.end(), weak_ids.begin(), weak_ids.end());
    const auto [s0, n0] = score(0, h0);
    double best_ens = 1e300, best_weak = 1e300;
    std::string best_ens_id, best_weak_id;
    for (const auto& m : ensembles) {
        if (s0.at(m) < best_ens) {
            best_ens = s0.at(m);
            best_ens_id = m;
        }
    }
    for (const auto& m : weak_ids) {
        if (s0.at(m) < best_weak) {
            best_weak = s0.at(m);
            best_weak_id = m;
        }
    }
    v.check(n0 >= 30, "only " + std::to_string(n0) + " common h=0 targets");
    v.check(best_ens <= 1.05 * best_weak, "best ensemble " + best_ens_id + " " + fmt(best_ens) +
                                              " > 1.05 x best weak " + best_weak_id + " " + fmt(best_weak));
    std::string margins;
    for (int h = 0; h < kHorizonCount; ++h) {
        std::vector<std::string> models = ensembles;
        models.push_back("ar3_baseline");
        const auto [s, n] = score(h, models);
        v.check(n >= 30, "h" + std::to_string(h) + ": only " + std::to_string(n) + " common targets");
        double worst = 0;
        for (const auto& m : ensembles) {
            v.check(s.at(m) < s.at("ar3_baseline"), "h" + std::to_string(h) + " " + m + " " + fmt(s.at(m)) +
                                                         " does not beat ar3 " + fmt(s.at("ar3_baseline")));
            worst = std::max(worst, s.at(m));
        }
        margins += " h" + std::to_string(h) + " " + fmt(worst) + "/" + fmt(s.at("ar3_baseline"));
    }
    v.summary = "h0 best ensemble " + best_ens_id + " " + fmt(best_ens) + " vs best weak " + best_weak_id + " " +
                fmt(best_weak) + "; worst ensemble/ar3:" + margins + "; full run " + fmt(run.seconds) + " s";
}

// ---------------------------------------------------------------------------
// 8. determinism

void determinism(Verdict& v)
{
    const Bundle& b = default_bundle();
    const FullRun& a = first_run();
    const FullRun again = full_run(b.panel);
    const fs::path da = scratch("run_a");
    const fs::path db = scratch("run_b");
    write_ledger_csv(a.ledger, a.report, b.cdc_final, da);
    write_ledger_csv(again.ledger, again.report, b.cdc_final, db);
    std::size_t bytes = 0;
    for (const char* name : {"predictions.csv", "errors.csv", "metrics.csv"}) {
        const std::string x = slurp(da / name);
        const std::string y = slurp(db / name);
        v.check(!x.empty() && x == y, std::string(name) + " differs between runs");
        bytes += x.size();
    }
    v.summary = "predictions, errors and metrics CSVs byte-identical (" + std::to_string(bytes) + " bytes, " +
                std::to_string(a.ledger.records.size()) + " records)";
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "metric oracles and properties", 5, metric_oracles},
        {2, "non-negative LASSO vs projected-gradient oracle", 60, lasso_vs_pgd},
        {3, "SVR KKT conditions", 60, svr_kkt},
        {4, "AdaBoost.R2 vs step-by-step reference", 30, adaboost_reference},
        {5, "no lookahead under post-issue mutations", 120, no_lookahead},
        {6, "expanding-window row counts", 60, expanding_window},
        {7, "ensembles vs weak predictors and AR3", 300, ensemble_claim},
        {8, "determinism of output CSVs", 300, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(v);
        } catch (const std::exception& e) {
            v.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.check(secs < c.budget_seconds, "took " + fmt(secs) + " s, budget " + fmt(c.budget_seconds) + " s");
        const bool ok = v.failures == 0;
        failed += !ok;
        std::printf("%s criterion %d: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                    v.summary.empty() ? "" : " - ", v.summary.c_str());
        for (const auto& n : v.notes) {
            std::printf("    %s\n", n.c_str());
        }
        if (v.failures > static_cast<int>(v.notes.size())) {
            std::printf("    ... %d failed checks in total\n", v.failures);
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
