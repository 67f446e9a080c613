#pragma once

#include "flucast/weak_predictors.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flucast {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index), so output never depends on call order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t stream_id(std::string_view name, std::uint64_t sub = 0);

    std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const;
    /// In (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t index) const;
    double uniform(std::uint64_t stream, std::uint64_t index, double lo, double hi) const;
    double normal(std::uint64_t stream, std::uint64_t index, double sd) const;

private:
    std::uint64_t seed_;
};

struct BiasEpisode {
    std::string source;
    std::optional<std::pair<int, int>> weeks; // inclusive week indices; absent = final season peak +- 4
    double multiplier = 1.0;
};

inline constexpr std::array<const char*, 6> kSynthSources{"cdc", "ath", "gft", "fny", "twt", "gt"};
inline constexpr int kGtQueries = 100;
inline constexpr int kGtInformative = 10;

struct SynthConfig {
    std::uint64_t seed = 42;
    int n_weeks = 180;
    EpiWeek start_week{2010, 40};
    std::map<std::string, bool> enabled;            // missing means on
    std::map<std::string, EpiWeek> source_start;    // first week a source reports
    std::map<std::string, int> lags;                // report lag; defaults cdc 2, others 1
    std::optional<BiasEpisode> bias_episode;

    bool is_enabled(const std::string& source) const;
    int lag_for(const std::string& source) const;
    void validate() const;
};

SynthConfig parse_synth_config(std::string_view json_text);
SynthConfig load_synth_config(const std::filesystem::path& path);

struct SynthPanel {
    std::map<EpiWeek, double> truth;
    std::map<std::string, VintagedSeries> series; // includes "cdc"
    std::optional<QueryPanel> gt;
    std::vector<int> bias_weeks;                  // week indices the episode touched
};

/// Seasonal latent %ILI plus noisy, lagged views of it per source; CDC gets a
/// first release and one revision two weeks later.
SynthPanel synth_panel(const SynthConfig& cfg);

/// panel.csv, gt_queries.csv (if generated) and truth.csv.
void write_synth_panel(const SynthPanel& panel, const std::filesystem::path& dir);

} // namespace flucast
