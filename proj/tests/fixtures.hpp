#pragma once

// Small hand-built panels for the engine tests.

#include "flucast/backtest.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fixture {

using flucast::EpiWeek;

inline const EpiWeek kStart{2011, 1};

inline double season(int k) { return 2.0 + 1.5 * std::sin(k / 7.0) + 0.01 * k; }

// Deterministic wiggle in [-1, 1] that is not a smooth function of k.
inline double jitter(int k, int stream)
{
    const double v = std::sin(12.9898 * k + 78.233 * stream) * 43758.5453;
    return 2.0 * (v - std::floor(v)) - 1.0;
}

/// CDC first released `lag` weeks after each week, revised by `revision`
/// two weeks later.
inline flucast::VintagedSeries cdc(int weeks, const std::function<double(int)>& f, double revision = 0.1, int lag = 2)
{
    std::vector<flucast::VintagedObservation> obs;
    for (int k = 0; k < weeks; ++k) {
        obs.push_back({kStart + k, kStart + (k + lag), f(k)});
        obs.push_back({kStart + k, kStart + (k + lag + 2), f(k) + revision});
    }
    return flucast::VintagedSeries("cdc", flucast::Unit::percent_ili, std::move(obs));
}

inline flucast::VintagedSeries source(const std::string& id, int weeks, const std::function<double(int)>& f,
                                      int lag = 1)
{
    std::map<EpiWeek, double> values;
    for (int k = 0; k < weeks; ++k) {
        values[kStart + k] = f(k);
    }
    return flucast::VintagedSeries::unrevised(id, flucast::Unit::percent_ili, values, lag);
}

/// Five noisy views of the season, each its own linear_map source.
inline flucast::Panel five_source_panel(int weeks)
{
    flucast::Panel p;
    p.cdc = cdc(weeks, season);
    for (int s = 1; s <= 5; ++s) {
        p.sources["s" + std::to_string(s)] = source("s" + std::to_string(s), weeks, [s](int k) {
            return (0.6 + 0.1 * s) * season(k) + 0.2 + 0.05 * s * jitter(k, s);
        });
    }
    return p;
}

inline flucast::BacktestConfig five_source_config(EpiWeek first, EpiWeek last)
{
    flucast::BacktestConfig c;
    for (int s = 1; s <= 5; ++s) {
        flucast::SourceSpec spec;
        spec.id = "s" + std::to_string(s);
        spec.kind = flucast::SourceKind::linear_map;
        c.sources.push_back(spec);
    }
    c.first_issue = first;
    c.last_issue = last;
    c.adaboost_rounds = 10;
    return c;
}

} // namespace fixture
