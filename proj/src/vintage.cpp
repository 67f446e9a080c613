#include "flucast/vintage.hpp"

#include "flucast/errors.hpp"

#include <algorithm>
#include <cmath>

namespace flucast {

std::optional<double> Snapshot::at(EpiWeek target) const
{
    const auto it = values.find(target);
    if (it == values.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<EpiWeek> latest_available_week(const Snapshot& snapshot)
{
    if (snapshot.values.empty()) {
        return std::nullopt;
    }
    return snapshot.values.rbegin()->first;
}

VintagedSeries::VintagedSeries(std::string source_id, Unit unit, std::vector<VintagedObservation> observations)
    : source_id_(std::move(source_id)), unit_(unit), observations_(std::move(observations))
{
    for (const auto& obs : observations_) {
        if (obs.report_week < obs.target_week) {
            throw ValidationError(source_id_ + ": report week " + to_label(obs.report_week) +
                                  " precedes target week " + to_label(obs.target_week));
        }
        if (!std::isfinite(obs.value) || obs.value < 0.0) {
            throw ValidationError(source_id_ + ": value for " + to_label(obs.target_week) +
                                  " must be finite and non-negative");
        }
    }
    std::sort(observations_.begin(), observations_.end(), [](const auto& a, const auto& b) {
        return std::tie(a.target_week, a.report_week) < std::tie(b.target_week, b.report_week);
    });
    for (std::size_t i = 0; i < observations_.size();) {
        std::size_t j = i + 1;
        while (j < observations_.size() && observations_[j].target_week == observations_[i].target_week) {
            if (observations_[j].report_week == observations_[j - 1].report_week) {
                throw ValidationError(source_id_ + ": duplicate observation for target " +
                                      to_label(observations_[j].target_week) + " reported " +
                                      to_label(observations_[j].report_week));
            }
            ++j;
        }
        by_target_.emplace_hint(by_target_.end(), observations_[i].target_week, Range{i, j});
        i = j;
    }
}

VintagedSeries VintagedSeries::unrevised(std::string source_id, Unit unit, const std::map<EpiWeek, double>& values,
                                         int lag_weeks)
{
    std::vector<VintagedObservation> obs;
    obs.reserve(values.size());
    for (const auto& [week, value] : values) {
        obs.push_back({week, epiweek_add(week, lag_weeks), value});
    }
    return VintagedSeries(std::move(source_id), unit, std::move(obs));
}

Snapshot VintagedSeries::as_of(EpiWeek issue) const
{
    Snapshot snap{issue, {}};
    for (const auto& [target, range] : by_target_) {
        if (target > issue) {
            break;
        }
        // reports are sorted, so scan back from the newest
        for (std::size_t k = range.end; k-- > range.begin;) {
            if (observations_[k].report_week <= issue) {
                snap.values.emplace_hint(snap.values.end(), target, observations_[k].value);
                break;
            }
        }
    }
    return snap;
}

Snapshot VintagedSeries::final() const
{
    Snapshot snap{max_report_week().value_or(EpiWeek{}), {}};
    for (const auto& [target, range] : by_target_) {
        snap.values.emplace_hint(snap.values.end(), target, observations_[range.end - 1].value);
    }
    return snap;
}

Snapshot VintagedSeries::first_release_as_of(EpiWeek issue) const
{
    Snapshot snap{issue, {}};
    for (const auto& [target, range] : by_target_) {
        if (target > issue) {
            break;
        }
        const auto& first = observations_[range.begin];
        if (first.report_week <= issue) {
            snap.values.emplace_hint(snap.values.end(), target, first.value);
        }
    }
    return snap;
}

std::optional<double> VintagedSeries::value_as_of(EpiWeek target, EpiWeek issue) const
{
    const auto it = by_target_.find(target);
    if (it == by_target_.end()) {
        return std::nullopt;
    }
    for (std::size_t k = it->second.end; k-- > it->second.begin;) {
        if (observations_[k].report_week <= issue) {
            return observations_[k].value;
        }
    }
    return std::nullopt;
}

std::optional<VintagedObservation> VintagedSeries::first_release(EpiWeek target) const
{
    const auto it = by_target_.find(target);
    if (it == by_target_.end()) {
        return std::nullopt;
    }
    return observations_[it->second.begin];
}

std::optional<EpiWeek> VintagedSeries::first_target_week() const
{
    if (by_target_.empty()) {
        return std::nullopt;
    }
    return by_target_.begin()->first;
}

std::optional<EpiWeek> VintagedSeries::last_target_week() const
{
    if (by_target_.empty()) {
        return std::nullopt;
    }
    return by_target_.rbegin()->first;
}

std::optional<EpiWeek> VintagedSeries::max_report_week() const
{
    std::optional<EpiWeek> best;
    for (const auto& obs : observations_) {
        if (!best || obs.report_week > *best) {
            best = obs.report_week;
        }
    }
    return best;
}

} // namespace flucast
