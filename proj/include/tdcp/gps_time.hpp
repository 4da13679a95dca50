#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace tdcp {

/// Calendar date/time in the GPS time scale (no leap-second handling).
struct CalendarTime {
  int year = 1980;
  int month = 1;
  int day = 6;
  int hour = 0;
  int minute = 0;
  double second = 0.0;
};

/// GPS time as (week, nanoseconds-of-week). Differences are exact to 1 ns.
class GpsTime {
 public:
  static constexpr std::int64_t kNanosPerWeek = 604800LL * 1'000'000'000LL;

  constexpr GpsTime() = default;
  GpsTime(int week, double seconds_of_week);

  static GpsTime from_nanos(int week, std::int64_t nanos_of_week);
  static GpsTime from_calendar(const CalendarTime& cal);

  int week() const { return week_; }
  double sow() const { return static_cast<double>(nanos_) / 1e9; }
  std::int64_t nanos_of_week() const { return nanos_; }
  std::int64_t total_nanos() const { return static_cast<std::int64_t>(week_) * kNanosPerWeek + nanos_; }
  double total_seconds() const;

  CalendarTime to_calendar() const;
  /// Day of year, 1-based.
  int day_of_year() const;

  GpsTime operator+(double seconds) const;
  GpsTime operator-(double seconds) const { return *this + (-seconds); }
  /// Difference in seconds, computed from integer nanoseconds.
  double operator-(const GpsTime& other) const;

  auto operator<=>(const GpsTime& other) const { return total_nanos() <=> other.total_nanos(); }
  bool operator==(const GpsTime& other) const { return total_nanos() == other.total_nanos(); }

  std::string to_string() const;

 private:
  int week_ = 0;
  std::int64_t nanos_ = 0;
};

}  // namespace tdcp
