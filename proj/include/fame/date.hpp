#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fame {

// Calendar date at day precision, stored as days since 1970-01-01
// (proleptic Gregorian).
class Date {
 public:
  constexpr Date() = default;

  static Date from_days(std::int32_t days) {
    Date d;
    d.days_ = days;
    return d;
  }
  // Throws fame::Error on an invalid calendar date.
  static Date from_ymd(int year, int month, int day);
  // Accepts "YYYY-MM-DD", optionally followed by 'T' or ' ' and a time part
  // which is ignored. Returns nullopt for anything else.
  static std::optional<Date> parse(std::string_view text);
  // Like parse() but throws with the offending text.
  static Date parse_or_throw(std::string_view text);

  std::int32_t days() const { return days_; }
  int year() const;
  int month() const;
  int day() const;
  std::string iso() const;

  Date operator+(int n) const { return from_days(days_ + n); }
  Date operator-(int n) const { return from_days(days_ - n); }
  friend int operator-(Date a, Date b) { return a.days_ - b.days_; }
  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::int32_t days_ = 0;
};

bool is_valid_ymd(int year, int month, int day);

}  // namespace fame
