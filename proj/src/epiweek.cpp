#include "flucast/epiweek.hpp"

#include "flucast/errors.hpp"

#include <charconv>
#include <cstdio>

namespace flucast {

namespace {

using std::chrono::days;
using std::chrono::sys_days;

void check_year(int year, YearRange range)
{
    if (year < range.first || year > range.last) {
        throw ValidationError("year " + std::to_string(year) + " outside supported range " +
                              std::to_string(range.first) + ".." + std::to_string(range.last));
    }
}

} // namespace

sys_days mmwr_week1_start(int year)
{
    const sys_days jan4 = std::chrono::year{year} / std::chrono::January / 4;
    const unsigned dow = std::chrono::weekday{jan4}.c_encoding(); // Sunday == 0
    return jan4 - days{dow};
}

int weeks_in_year(int year)
{
    return static_cast<int>((mmwr_week1_start(year + 1) - mmwr_week1_start(year)).count() / 7);
}

EpiWeek make_epiweek(int year, int week, YearRange range)
{
    check_year(year, range);
    if (week < 1 || week > weeks_in_year(year)) {
        throw ValidationError("week " + std::to_string(week) + " does not exist in MMWR year " +
                              std::to_string(year));
    }
    return EpiWeek{year, week};
}

sys_days week_start(EpiWeek w)
{
    return mmwr_week1_start(w.year) + days{7 * (w.week - 1)};
}

EpiWeek epiweek_from_date(sys_days day, YearRange range)
{
    int year = static_cast<int>(std::chrono::year_month_day{day}.year());
    if (day < mmwr_week1_start(year)) {
        --year;
    } else if (day >= mmwr_week1_start(year + 1)) {
        ++year;
    }
    check_year(year, range);
    const auto offset = (day - mmwr_week1_start(year)).count();
    return EpiWeek{year, static_cast<int>(offset / 7) + 1};
}

EpiWeek epiweek_from_label(std::string_view label, YearRange range)
{
    // YYYY-Www
    const auto malformed = [&] {
        return ValidationError("malformed epiweek label '" + std::string(label) + "' (want YYYY-Www)");
    };
    if (label.size() != 8 || label[4] != '-' || label[5] != 'W') {
        throw malformed();
    }
    int year = 0;
    int week = 0;
    const char* begin = label.data();
    auto [py, ey] = std::from_chars(begin, begin + 4, year);
    auto [pw, ew] = std::from_chars(begin + 6, begin + 8, week);
    if (ey != std::errc{} || py != begin + 4 || ew != std::errc{} || pw != begin + 8) {
        throw malformed();
    }
    return make_epiweek(year, week, range);
}

std::string to_label(EpiWeek w)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-W%02d", w.year, w.week);
    return buf;
}

EpiWeek epiweek_add(EpiWeek w, int k, YearRange range)
{
    if (k == 0) {
        return w;
    }
    return epiweek_from_date(week_start(w) + days{7L * k}, range);
}

int weeks_between(EpiWeek from, EpiWeek to)
{
    return static_cast<int>((week_start(to) - week_start(from)).count() / 7);
}

} // namespace flucast
