#include "tdcp/gps_time.hpp"

#include <cmath>
#include <cstdio>

#include "tdcp/error.hpp"

namespace tdcp {
namespace {

constexpr std::int64_t kNanosPerSecond = 1'000'000'000LL;
constexpr std::int64_t kNanosPerDay = 86400LL * kNanosPerSecond;

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153U * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2U) / 5U + static_cast<unsigned>(d) - 1U;
  const unsigned doe = yoe * 365U + yoe / 4U - yoe / 100U + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460U + doe / 36524U - doe / 146096U) / 365U;
  const unsigned doy = doe - (365U * yoe + yoe / 4U - yoe / 100U);
  const unsigned mp = (5U * doy + 2U) / 153U;
  d = static_cast<int>(doy - (153U * mp + 2U) / 5U + 1U);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2 ? 1 : 0));
}

const std::int64_t kGpsEpochDays = days_from_civil(1980, 1, 6);

GpsTime from_total_nanos(std::int64_t total) {
  std::int64_t week = total / GpsTime::kNanosPerWeek;
  std::int64_t rem = total % GpsTime::kNanosPerWeek;
  if (rem < 0) {
    rem += GpsTime::kNanosPerWeek;
    --week;
  }
  return GpsTime::from_nanos(static_cast<int>(week), rem);
}

}  // namespace

GpsTime::GpsTime(int week, double seconds_of_week) {
  if (!(seconds_of_week >= 0.0 && seconds_of_week < 604800.0)) {
    throw InvalidArgument("GpsTime: seconds of week out of range: " + std::to_string(seconds_of_week));
  }
  week_ = week;
  nanos_ = std::llround(seconds_of_week * 1e9);
  if (nanos_ >= kNanosPerWeek) {
    nanos_ -= kNanosPerWeek;
    ++week_;
  }
}

GpsTime GpsTime::from_nanos(int week, std::int64_t nanos_of_week) {
  GpsTime t;
  t.week_ = week;
  t.nanos_ = nanos_of_week;
  if (nanos_of_week < 0 || nanos_of_week >= kNanosPerWeek) {
    return from_total_nanos(static_cast<std::int64_t>(week) * kNanosPerWeek + nanos_of_week);
  }
  return t;
}

GpsTime GpsTime::from_calendar(const CalendarTime& cal) {
  const std::int64_t days = days_from_civil(cal.year, cal.month, cal.day) - kGpsEpochDays;
  const double whole = std::floor(cal.second);
  const std::int64_t nanos = days * kNanosPerDay +
                             (static_cast<std::int64_t>(cal.hour) * 3600 + cal.minute * 60 +
                              static_cast<std::int64_t>(whole)) * kNanosPerSecond +
                             std::llround((cal.second - whole) * 1e9);
  return from_total_nanos(nanos);
}

double GpsTime::total_seconds() const {
  return static_cast<double>(week_) * 604800.0 + static_cast<double>(nanos_) / 1e9;
}

CalendarTime GpsTime::to_calendar() const {
  const std::int64_t total = total_nanos();
  std::int64_t days = total / kNanosPerDay;
  std::int64_t rem = total % kNanosPerDay;
  if (rem < 0) {
    rem += kNanosPerDay;
    --days;
  }
  CalendarTime cal;
  civil_from_days(days + kGpsEpochDays, cal.year, cal.month, cal.day);
  const std::int64_t secs = rem / kNanosPerSecond;
  cal.hour = static_cast<int>(secs / 3600);
  cal.minute = static_cast<int>((secs % 3600) / 60);
  cal.second = static_cast<double>(secs % 60) + static_cast<double>(rem % kNanosPerSecond) / 1e9;
  return cal;
}

int GpsTime::day_of_year() const {
  const CalendarTime cal = to_calendar();
  return static_cast<int>(days_from_civil(cal.year, cal.month, cal.day) - days_from_civil(cal.year, 1, 1)) + 1;
}

GpsTime GpsTime::operator+(double seconds) const {
  return from_total_nanos(total_nanos() + std::llround(seconds * 1e9));
}

double GpsTime::operator-(const GpsTime& other) const {
  return static_cast<double>(total_nanos() - other.total_nanos()) / 1e9;
}

std::string GpsTime::to_string() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d:%.9f", week_, sow());
  return buf;
}

}  // namespace tdcp
