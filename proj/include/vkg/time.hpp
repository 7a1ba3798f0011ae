#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace vkg {

/// UTC instant. Raw AIS data carries whole seconds; imputed points may
/// land between seconds, hence millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Duration = std::chrono::milliseconds;
using Date = std::chrono::year_month_day;

/// Accepts "YYYY-MM-DD HH:MM:SS", ISO-8601 ("YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm]")
/// and the "DD/MM/YYYY HH:MM:SS" layout used by Danish AIS dumps.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// ISO-8601 UTC, milliseconds only when nonzero.
std::string format_timestamp(Timestamp t);

/// "YYYY-MM-DD HH:MM:SS" (sub-second part dropped).
std::string format_timestamp_plain(Timestamp t);

std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

inline Duration from_seconds(double s) {
  return Duration{static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
}

inline Timestamp from_epoch_seconds(std::int64_t s) {
  return Timestamp{std::chrono::seconds{s}};
}

/// Seconds elapsed since UTC midnight of the same day.
std::int64_t seconds_of_day(Timestamp t);

}  // namespace vkg
