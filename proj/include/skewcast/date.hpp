#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace skewcast {

using Day = std::chrono::sys_days;

// Parses a strict ISO-8601 `YYYY-MM-DD`. Throws DataError("BadDate") on anything else.
Day parse_day(std::string_view text);

std::string format_day(Day day);

// `YYYYMMDD`, used in forecast version labels.
std::string format_day_compact(Day day);

inline Day add_days(Day day, int n) { return day + std::chrono::days(n); }

inline int days_between(Day from, Day to) { return static_cast<int>((to - from).count()); }

// 0 = Monday ... 6 = Sunday.
int weekday_index(Day day);

}  // namespace skewcast
