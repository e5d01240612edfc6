#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace crrix {

/// A UTC calendar date.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}) {}

  /// Strict `YYYY-MM-DD`; returns nullopt for anything else or an impossible date.
  static std::optional<Date> parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto num = [&](std::string_view part, auto& out) {
      for (char c : part)
        if (c < '0' || c > '9') return false;
      auto r = std::from_chars(part.data(), part.data() + part.size(), out);
      return r.ec == std::errc{};
    };
    if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{std::chrono::sys_days{ymd}};
  }

  std::string str() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr long serial() const { return days_.time_since_epoch().count(); }

  constexpr Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }

  /// Monday of the ISO week containing this date.
  constexpr Date iso_week_start() const {
    const std::chrono::weekday wd{days_};
    const int back = static_cast<int>(wd.iso_encoding()) - 1;
    return Date{days_ - std::chrono::days{back}};
  }

  constexpr Date month_start() const {
    const std::chrono::year_month_day ymd{days_};
    return Date{std::chrono::sys_days{ymd.year() / ymd.month() / std::chrono::day{1}}};
  }

  constexpr Date next_month_start() const {
    const std::chrono::year_month_day ymd{days_};
    const auto next = ymd.year() / ymd.month() / std::chrono::day{1} + std::chrono::months{1};
    return Date{std::chrono::sys_days{next}};
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace crrix
