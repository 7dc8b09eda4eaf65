#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace welfarecast {

// Calendar day. Arithmetic is in whole days.
using Date = std::chrono::sys_days;

// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws ValueError on a
// malformed string or an invalid Gregorian date.
Date parse_date(std::string_view text);

std::string format_date(Date date);

inline Date days_before(Date date, int days) { return date - std::chrono::days{days}; }

int year_of(Date date);

}  // namespace welfarecast
