#include "welfarecast/date.hpp"

#include <charconv>
#include <cstdio>

#include "welfarecast/error.hpp"

namespace welfarecast {

namespace {

int parse_fixed_digits(std::string_view text, std::string_view whole) {
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') fail(ErrorKind::Value, "malformed date '" + std::string(whole) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    fail(ErrorKind::Value, "malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  const int y = parse_fixed_digits(text.substr(0, 4), text);
  const int m = parse_fixed_digits(text.substr(5, 2), text);
  const int d = parse_fixed_digits(text.substr(8, 2), text);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) fail(ErrorKind::Value, "invalid calendar date '" + std::string(text) + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date date) {
  return static_cast<int>(std::chrono::year_month_day{date}.year());
}

}  // namespace welfarecast
