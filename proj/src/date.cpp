#include "dscnn/date.hpp"

#include <cstdio>

#include "dscnn/errors.hpp"

namespace dscnn {

Date Date::parse(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  char trailing = '\0';
  if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &trailing) != 3) {
    throw DataError("invalid date '" + iso + "', expected YYYY-MM-DD");
  }
  return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                    std::to_string(month) + "-" + std::to_string(day));
  }
  return Date{ymd};
}

std::string Date::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date Date::plus_days(int64_t n) const {
  const std::chrono::sys_days shifted = sys() + std::chrono::days(n);
  return Date{std::chrono::year_month_day(shifted)};
}

int64_t operator-(const Date& a, const Date& b) {
  return (a.sys() - b.sys()).count();
}

}  // namespace dscnn
