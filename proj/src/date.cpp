#include "skewcast/date.hpp"

#include <cctype>
#include <cstdio>

#include "skewcast/error.hpp"

namespace skewcast {

Day parse_day(std::string_view text) {
  auto bad = [&] { return data_error("BadDate", "expected YYYY-MM-DD, got '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw bad();
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
    return v;
  };
  const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(num(8, 2))}};
  if (!ymd.ok()) throw bad();
  return Day{ymd};
}

std::string format_day(Day day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_day_compact(Day day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int weekday_index(Day day) {
  // 1970-01-01 was a Thursday.
  const long long n = day.time_since_epoch().count();
  return static_cast<int>(((n + 3) % 7 + 7) % 7);
}

}  // namespace skewcast
