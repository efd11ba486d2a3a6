#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace vulnscape {

/// Calendar date, always valid once constructed.
class Date {
public:
    Date() = default;
    /// Throws BadDate for an impossible calendar date.
    Date(int year, unsigned month, unsigned day);

    /// Strict `YYYY-MM-DD`.
    static std::optional<Date> parse(std::string_view text);

    int year() const noexcept { return static_cast<int>(ymd_.year()); }
    unsigned month() const noexcept { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const noexcept { return static_cast<unsigned>(ymd_.day()); }

    std::string iso() const;

    friend bool operator==(const Date& a, const Date& b) noexcept { return a.ymd_ == b.ymd_; }
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) noexcept {
        return std::chrono::sys_days(a.ymd_) <=> std::chrono::sys_days(b.ymd_);
    }

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1}, std::chrono::day{1}};
};

/// Completed years from `from` to `to` (birthday arithmetic; a Feb 29
/// birthday completes a year on Mar 1 in non-leap years).
int whole_years_between(const Date& from, const Date& to);

}  // namespace vulnscape
