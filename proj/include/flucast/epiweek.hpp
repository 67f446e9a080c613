#pragma once

#include <chrono>
#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace flucast {

/// Inclusive range of Gregorian years the calendar accepts.
struct YearRange {
    int first = 2000;
    int last = 2100;
};

inline constexpr YearRange kDefaultYearRange{};

/// MMWR surveillance week. Week 1 is the Sunday-to-Saturday week holding at
/// least four January days, so a year has 52 or 53 weeks.
///
/// Construct through make_epiweek / epiweek_from_label; the aggregate fields are
/// public so the type stays trivially copyable and usable as a map key.
struct EpiWeek {
    int year = 2000;
    int week = 1;

    friend constexpr auto operator<=>(const EpiWeek&, const EpiWeek&) = default;
};

/// Sunday that starts MMWR week 1 of `year`.
std::chrono::sys_days mmwr_week1_start(int year);

int weeks_in_year(int year);

/// Validating constructor; throws ValidationError.
EpiWeek make_epiweek(int year, int week, YearRange range = kDefaultYearRange);

/// Sunday that starts the week.
std::chrono::sys_days week_start(EpiWeek w);

/// MMWR week containing `day`.
EpiWeek epiweek_from_date(std::chrono::sys_days day, YearRange range = kDefaultYearRange);

/// Parses "YYYY-Www". Throws ValidationError on a malformed label or a week
/// number that does not exist in that year.
EpiWeek epiweek_from_label(std::string_view label, YearRange range = kDefaultYearRange);

std::string to_label(EpiWeek w);

/// Advances `k` weeks (negative goes back). Throws ValidationError if the
/// result leaves `range`.
EpiWeek epiweek_add(EpiWeek w, int k, YearRange range = kDefaultYearRange);

/// Signed number of weeks from `from` to `to`.
int weeks_between(EpiWeek from, EpiWeek to);

inline EpiWeek operator+(EpiWeek w, int k) { return epiweek_add(w, k); }
inline EpiWeek operator-(EpiWeek w, int k) { return epiweek_add(w, -k); }
inline int operator-(EpiWeek a, EpiWeek b) { return weeks_between(b, a); }

} // namespace flucast

template <>
struct std::hash<flucast::EpiWeek> {
    std::size_t operator()(const flucast::EpiWeek& w) const noexcept
    {
        return std::hash<int>{}(w.year * 64 + w.week);
    }
};
