#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkg/ais_record.hpp"
#include "vkg/time.hpp"

namespace vkg {

struct InvalidTemplate : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidSourceConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FetchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Daily window [start, end) in seconds after UTC midnight; wraps past
/// midnight when start > end.
struct TimeWindow {
  std::int64_t start_s = 0;
  std::int64_t end_s = 86400;

  bool contains(Timestamp t) const;
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// "HH:MM" or "HH:MM:SS" -> seconds after midnight ("24:00" allowed).
std::optional<std::int64_t> parse_time_of_day(std::string_view s);
std::string format_time_of_day(std::int64_t seconds);

struct SourceConfig {
  std::string name = "local";
  /// Remote URL with one {date} placeholder, a local path pattern with
  /// {date}, or a local directory holding one file per day.
  std::string url_template;
  Date date_from;
  Date date_to;
  std::optional<TimeWindow> time_interval;
  std::filesystem::path cache_dir = "cache";

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

struct SourceEntry {
  Date date;
  std::string location;  // URL or local path
  bool remote = false;

  friend bool operator==(const SourceEntry&, const SourceEntry&) = default;
};

bool is_remote_location(std::string_view s);

/// One entry per day in [date_from, date_to], ascending. Pure.
std::vector<SourceEntry> resolve(const SourceConfig& cfg);

struct FetchOptions {
  int connect_timeout_s = 10;
  int read_timeout_s = 120;
};

/// Materializes the day's delimited file at cache_dir/{source}/{date}.csv.
/// A nonempty cached file short-circuits all I/O. Archives are expanded.
/// Writes go through a temporary file renamed into place.
std::filesystem::path fetch(const SourceEntry& entry, const std::filesystem::path& cache_dir,
                            const std::string& source_name, const FetchOptions& opts = {});

std::filesystem::path cache_path(const std::filesystem::path& cache_dir,
                                 const std::string& source_name, Date date);

std::vector<AisRecord> filter_time_window(std::vector<AisRecord> records, const TimeWindow& w);

}  // namespace vkg
