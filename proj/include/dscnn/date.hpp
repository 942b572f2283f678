#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace dscnn {

// Calendar date (proleptic Gregorian), ISO-8601 text form.
struct Date {
  std::chrono::year_month_day ymd{};

  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  static Date from_ymd(int year, unsigned month, unsigned day);
  std::string str() const;

  Date plus_days(int64_t n) const;
  auto operator<=>(const Date& other) const { return sys() <=> other.sys(); }
  bool operator==(const Date& other) const { return ymd == other.ymd; }

  std::chrono::sys_days sys() const { return std::chrono::sys_days(ymd); }
};

// Day difference a - b.
int64_t operator-(const Date& a, const Date& b);

// Inclusive date range.
struct DateRange {
  Date start;
  Date end;
  int64_t days() const { return end - start + 1; }
};

}  // namespace dscnn
