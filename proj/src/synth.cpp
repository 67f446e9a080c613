#include "flucast/synth.hpp"

#include "flucast/io.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace flucast {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t CounterRng::stream_id(std::string_view name, std::uint64_t sub)
{
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (const char c : name) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    }
    return splitmix64(h ^ splitmix64(sub));
}

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t index) const
{
    return splitmix64(splitmix64(seed_ ^ splitmix64(stream)) + index);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index) const
{
    // 53 random bits, shifted off zero
    return (static_cast<double>(bits(stream, index) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index, double lo, double hi) const
{
    return lo + (hi - lo) * uniform(stream, index);
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t index, double sd) const
{
    const double u1 = uniform(stream, 2 * index);
    const double u2 = uniform(stream, 2 * index + 1);
    return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool SynthConfig::is_enabled(const std::string& source) const
{
    const auto it = enabled.find(source);
    return it == enabled.end() || it->second;
}

int SynthConfig::lag_for(const std::string& source) const
{
    const auto it = lags.find(source);
    if (it != lags.end()) {
        return it->second;
    }
    return source == "cdc" ? 2 : 1;
}

void SynthConfig::validate() const
{
    if (n_weeks < 104) {
        throw ValidationError("synth: n_weeks must be >= 104, got " + std::to_string(n_weeks));
    }
    if (!is_enabled("cdc")) {
        throw ValidationError("synth: the cdc series cannot be disabled");
    }
    const auto known = [](const std::string& s) {
        for (const char* k : kSynthSources) {
            if (s == k) {
                return true;
            }
        }
        return false;
    };
    for (const auto& [s, on] : enabled) {
        if (!known(s)) {
            throw ValidationError("synth: unknown source '" + s + "'");
        }
    }
    for (const auto& [s, lag] : lags) {
        if (!known(s) || lag < 0) {
            throw ValidationError("synth: bad lag entry for '" + s + "'");
        }
    }
    for (const auto& [s, w] : source_start) {
        if (!known(s)) {
            throw ValidationError("synth: unknown source '" + s + "' in source_start");
        }
    }
    if (bias_episode) {
        if (!known(bias_episode->source) || bias_episode->source == "gt") {
            throw ValidationError("synth: bias_episode source must be one of cdc, ath, gft, fny, twt");
        }
        if (!(bias_episode->multiplier >= 0.0) || !std::isfinite(bias_episode->multiplier)) {
            throw ValidationError("synth: bias_episode multiplier must be finite and >= 0");
        }
        if (bias_episode->weeks && (bias_episode->weeks->first < 0 || bias_episode->weeks->second < bias_episode->weeks->first)) {
            throw ValidationError("synth: bias_episode weeks must be an increasing pair of indices >= 0");
        }
    }
}

SynthConfig parse_synth_config(std::string_view json_text)
{
    using nlohmann::json;
    SynthConfig cfg;
    try {
        const json j = json::parse(json_text);
        for (const auto& [k, v] : j.items()) {
            if (k == "seed") {
                cfg.seed = v.get<std::uint64_t>();
            } else if (k == "n_weeks") {
                cfg.n_weeks = v.get<int>();
            } else if (k == "start_week") {
                cfg.start_week = epiweek_from_label(v.get<std::string>());
            } else if (k == "sources") {
                for (const auto& [s, on] : v.items()) {
                    cfg.enabled[s] = on.get<bool>();
                }
            } else if (k == "source_start") {
                for (const auto& [s, w] : v.items()) {
                    cfg.source_start[s] = epiweek_from_label(w.get<std::string>());
                }
            } else if (k == "lags") {
                for (const auto& [s, lag] : v.items()) {
                    cfg.lags[s] = lag.get<int>();
                }
            } else if (k == "bias_episode") {
                if (v.is_null()) {
                    continue;
                }
                BiasEpisode b;
                b.source = v.at("source").get<std::string>();
                b.multiplier = v.at("multiplier").get<double>();
                const auto& w = v.at("weeks");
                if (w.is_string()) {
                    if (w.get<std::string>() != "final_peak") {
                        throw ValidationError("synth: bias_episode weeks must be [first, last] or \"final_peak\"");
                    }
                } else {
                    b.weeks = std::make_pair(w.at(0).get<int>(), w.at(1).get<int>());
                }
                cfg.bias_episode = b;
            } else {
                throw ValidationError("synth config: unknown key '" + k + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open synth config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synth_config(ss.str());
}

SynthPanel synth_panel(const SynthConfig& cfg)
{
    cfg.validate();
    const CounterRng rng(cfg.seed);
    const int n = cfg.n_weeks;
    const int n_seasons = (n + 51) / 52;
    std::vector<double> amplitude(static_cast<std::size_t>(n_seasons));
    std::vector<double> peak(static_cast<std::size_t>(n_seasons));
    for (int s = 0; s < n_seasons; ++s) {
        amplitude[static_cast<std::size_t>(s)] = rng.uniform(CounterRng::stream_id("amplitude"), s, 1.5, 3.5);
        peak[static_cast<std::size_t>(s)] = rng.uniform(CounterRng::stream_id("peak"), s, 20.0, 30.0);
    }

    SynthPanel out;
    std::vector<double> truth(static_cast<std::size_t>(n));
    std::vector<EpiWeek> weeks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i / 52);
        const double pos = i % 52;
        const double bump = amplitude[s] * std::exp(-(pos - peak[s]) * (pos - peak[s]) / 32.0);
        const double v = std::max(0.2, 0.8 + bump + rng.normal(CounterRng::stream_id("eta"), i, 0.05));
        truth[static_cast<std::size_t>(i)] = v;
        weeks[static_cast<std::size_t>(i)] = cfg.start_week + i;
        out.truth.emplace(weeks[static_cast<std::size_t>(i)], v);
    }

    std::vector<bool> biased(static_cast<std::size_t>(n), false);
    if (cfg.bias_episode) {
        int lo = 0;
        int hi = -1;
        if (cfg.bias_episode->weeks) {
            lo = cfg.bias_episode->weeks->first;
            hi = std::min(cfg.bias_episode->weeks->second, n - 1);
        } else {
            for (int s = n_seasons - 1; s >= 0; --s) {
                const int p = 52 * s + static_cast<int>(std::lround(peak[static_cast<std::size_t>(s)]));
                if (p < n) {
                    lo = std::max(0, p - 4);
                    hi = std::min(n - 1, p + 4);
                    break;
                }
            }
        }
        for (int i = lo; i <= hi; ++i) {
            biased[static_cast<std::size_t>(i)] = true;
            out.bias_weeks.push_back(i);
        }
    }
    const auto factor = [&](const std::string& source, int i) {
        return cfg.bias_episode && cfg.bias_episode->source == source && biased[static_cast<std::size_t>(i)]
                   ? cfg.bias_episode->multiplier
                   : 1.0;
    };
    const auto starts = [&](const std::string& source, int i) {
        const auto it = cfg.source_start.find(source);
        return it == cfg.source_start.end() || !(weeks[static_cast<std::size_t>(i)] < it->second);
    };

    {
        const int lag = cfg.lag_for("cdc");
        std::vector<VintagedObservation> obs;
        for (int i = 0; i < n; ++i) {
            if (!starts("cdc", i)) {
                continue;
            }
            const double t = truth[static_cast<std::size_t>(i)] * factor("cdc", i);
            const double final_value = std::max(0.0, t + rng.normal(CounterRng::stream_id("cdc"), i, 0.05));
            const double first =
                std::max(0.0, final_value * (1.0 + rng.normal(CounterRng::stream_id("cdc_first"), i, 0.03)));
            const EpiWeek w = weeks[static_cast<std::size_t>(i)];
            obs.push_back({w, w + lag, first});
            obs.push_back({w, w + (lag + 2), final_value});
        }
        out.series.emplace("cdc", VintagedSeries("cdc", Unit::percent_ili, std::move(obs)));
    }

    struct Linear {
        const char* id;
        double scale;
        double offset;
        double sd;
    };
    for (const Linear& src : {Linear{"ath", 0.8, 0.3, 0.08}, Linear{"gft", 1.0, 0.0, 0.10},
                              Linear{"fny", 0.9, 0.2, 0.12}, Linear{"twt", 0.5, 0.0, 0.10}}) {
        const std::string id = src.id;
        if (!cfg.is_enabled(id)) {
            continue;
        }
        std::map<EpiWeek, double> values;
        for (int i = 0; i < n; ++i) {
            if (!starts(id, i)) {
                continue;
            }
            const double t = truth[static_cast<std::size_t>(i)] * factor(id, i);
            values.emplace(weeks[static_cast<std::size_t>(i)],
                           std::max(0.0, src.scale * t + src.offset + rng.normal(CounterRng::stream_id(id), i, src.sd)));
        }
        out.series.emplace(id, VintagedSeries::unrevised(id, unit_for_source(id), values, cfg.lag_for(id)));
    }

    if (cfg.is_enabled("gt")) {
        QueryPanel gt;
        for (int j = 0; j < kGtQueries; ++j) {
            char name[8];
            std::snprintf(name, sizeof name, "q%03d", j + 1);
            gt.names.emplace_back(name);
            const std::uint64_t noise = CounterRng::stream_id("gt_noise", static_cast<std::uint64_t>(j));
            const bool informative = j < kGtInformative;
            const double coef = rng.uniform(CounterRng::stream_id("gt_coef"), j, 0.5, 1.5);
            const double level = rng.uniform(CounterRng::stream_id("gt_level"), j, 0.5, 3.0);
            std::map<EpiWeek, double> values;
            for (int i = 0; i < n; ++i) {
                if (!starts("gt", i)) {
                    continue;
                }
                const double base = informative ? coef * truth[static_cast<std::size_t>(i)] : level;
                values.emplace(weeks[static_cast<std::size_t>(i)], std::max(0.0, base + rng.normal(noise, i, 0.30)));
            }
            gt.columns.push_back(VintagedSeries::unrevised("gt:" + gt.names.back(), Unit::raw_volume, values,
                                                           cfg.lag_for("gt")));
        }
        out.gt = std::move(gt);
    }
    return out;
}

void write_synth_panel(const SynthPanel& panel, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("panel.csv");
        write_panel_csv(f, panel.series);
    }
    if (panel.gt) {
        auto f = open("gt_queries.csv");
        write_query_csv(f, *panel.gt);
    }
    auto f = open("truth.csv");
    write_week_values_csv(f, panel.truth);
}

} // namespace flucast
