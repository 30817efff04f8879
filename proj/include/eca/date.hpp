#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace eca {

// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days) : days_(days) {}

    // Strict ISO-8601 calendar date, YYYY-MM-DD. Returns nullopt on anything else.
    static std::optional<Date> parse(std::string_view text);
    static Date from_ymd(int year, unsigned month, unsigned day);

    constexpr std::int32_t days() const { return days_; }
    std::string iso() const;

    friend constexpr auto operator<=>(Date, Date) = default;
    friend constexpr std::int32_t operator-(Date a, Date b) { return a.days_ - b.days_; }
    friend constexpr Date operator+(Date a, std::int32_t d) { return Date(a.days_ + d); }

private:
    std::int32_t days_ = 0;
};

// Fixed day-to-month conversion used for every reported duration.
inline constexpr double kDaysPerMonth = 30.4375;

constexpr double days_to_months(double days) { return days / kDaysPerMonth; }
constexpr double months_to_days(double months) { return months * kDaysPerMonth; }

}  // namespace eca
