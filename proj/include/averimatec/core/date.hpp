#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "averimatec/core/errors.hpp"

namespace averimatec {

/// Calendar date (proleptic Gregorian). Ordering is chronological.
class Date {
 public:
  constexpr Date() = default;
  constexpr Date(int year, int month, int day) : year_(year), month_(month), day_(day) {}

  /// Accepts `YYYY-MM-DD`, optionally followed by a `T...` time part which is ignored.
  static std::optional<Date> try_parse(std::string_view text) {
    if (auto t = text.find('T'); t != std::string_view::npos) text = text.substr(0, t);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, int& out) {
      auto s = text.substr(pos, len);
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
    Date date{y, m, d};
    if (!date.valid()) return std::nullopt;
    return date;
  }

  static Date parse(std::string_view text) {
    if (auto d = try_parse(text)) return *d;
    throw ParseError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }

  bool valid() const {
    namespace c = std::chrono;
    return c::year_month_day{c::year{year_}, c::month{static_cast<unsigned>(month_)},
                          c::day{static_cast<unsigned>(day_)}}
        .ok();
  }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year_, month_, day_);
    return buf;
  }

  std::chrono::sys_days days() const {
    namespace c = std::chrono;
    return c::sys_days{c::year_month_day{c::year{year_}, c::month{static_cast<unsigned>(month_)},
                                   c::day{static_cast<unsigned>(day_)}}};
  }

  int year() const noexcept { return year_; }
  int month() const noexcept { return month_; }
  int day() const noexcept { return day_; }

  auto operator<=>(const Date&) const = default;

 private:
  int year_ = 1970;
  int month_ = 1;
  int day_ = 1;
};

}  // namespace averimatec
