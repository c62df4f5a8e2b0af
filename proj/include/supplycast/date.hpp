#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace supplycast {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws DataError on malformed input.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline int days_between(Date from, Date to) {
    return static_cast<int>((to - from).count());
}

inline Date add_days(Date d, int days) {
    return d + std::chrono::days{days};
}

}  // namespace supplycast
