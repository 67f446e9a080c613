#pragma once

#include "flucast/epiweek.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flucast {

enum class Unit { percent_ili, raw_volume };

/// One reported value: what was published for `target_week` in `report_week`.
struct VintagedObservation {
    EpiWeek target_week;
    EpiWeek report_week;
    double value = 0.0;

    friend bool operator==(const VintagedObservation&, const VintagedObservation&) = default;
};

/// Per-target values as they were known at `issue_week`.
struct Snapshot {
    EpiWeek issue_week;
    std::map<EpiWeek, double> values;

    bool empty() const { return values.empty(); }
    std::optional<double> at(EpiWeek target) const;
};

std::optional<EpiWeek> latest_available_week(const Snapshot& snapshot);

/// Revision-aware weekly series. Immutable after construction.
///
/// Every target week may carry several reports (first release, revisions);
/// queries never look past the issue week they are given.
class VintagedSeries {
public:
    VintagedSeries() = default;

    /// Throws ValidationError on report_week < target_week, a repeated
    /// (target_week, report_week) pair, or a negative / non-finite value.
    VintagedSeries(std::string source_id, Unit unit, std::vector<VintagedObservation> observations);

    /// Single-report series: each value is published `lag_weeks` after its week.
    static VintagedSeries unrevised(std::string source_id, Unit unit,
                                    const std::map<EpiWeek, double>& values, int lag_weeks);

    const std::string& source_id() const { return source_id_; }
    Unit unit() const { return unit_; }
    bool empty() const { return observations_.empty(); }

    /// Sorted by (target_week, report_week).
    std::span<const VintagedObservation> observations() const { return observations_; }

    /// Latest report with report_week <= issue, per target week.
    Snapshot as_of(EpiWeek issue) const;

    /// Latest report overall, per target week.
    Snapshot final() const;

    /// First release per target week, restricted to those released by `issue`.
    Snapshot first_release_as_of(EpiWeek issue) const;

    std::optional<double> value_as_of(EpiWeek target, EpiWeek issue) const;
    std::optional<VintagedObservation> first_release(EpiWeek target) const;

    std::optional<EpiWeek> first_target_week() const;
    std::optional<EpiWeek> last_target_week() const;
    std::optional<EpiWeek> max_report_week() const;

private:
    // [begin, end) into observations_ for one target week
    struct Range {
        std::size_t begin;
        std::size_t end;
    };

    std::string source_id_;
    Unit unit_ = Unit::percent_ili;
    std::vector<VintagedObservation> observations_;
    std::map<EpiWeek, Range> by_target_;
};

} // namespace flucast
