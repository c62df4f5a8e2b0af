#include "supplycast/date.hpp"

#include <charconv>
#include <cstdio>

#include "supplycast/errors.hpp"

namespace supplycast {

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    auto first = text.data() + pos;
    auto last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("malformed date '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    std::chrono::year_month_day ymd{std::chrono::year{parse_field(text, 0, 4)},
                                    std::chrono::month{static_cast<unsigned>(parse_field(text, 5, 2))},
                                    std::chrono::day{static_cast<unsigned>(parse_field(text, 8, 2))}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date '" + std::string(text) + "'");
    }
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace supplycast
