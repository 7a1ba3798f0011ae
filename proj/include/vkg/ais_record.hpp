#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vkg/geo.hpp"
#include "vkg/time.hpp"

namespace vkg {

/// Maritime Mobile Service Identity, 1 to 9 digits.
struct Mmsi {
  std::uint32_t value = 0;
  auto operator<=>(const Mmsi&) const = default;
};

std::string to_string(Mmsi id);

/// One validated AIS observation. Absent fields are std::nullopt; sentinel
/// values from the wire never survive parsing.
struct AisRecord {
  Mmsi vessel_id;
  Timestamp timestamp;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> sog;      // knots
  std::optional<double> cog;      // degrees [0, 360)
  std::optional<double> heading;  // degrees [0, 360)
  std::string nav_status = "Unknown";
  std::string vessel_type = "Unknown";
  std::optional<double> length_m;
  std::optional<double> width_m;
  std::optional<double> draught_m;
  std::optional<std::string> cargo_type;

  LatLon position() const { return {lat, lon}; }
  friend bool operator==(const AisRecord&, const AisRecord&) = default;
};

/// Which delimited column carries which attribute. Unmapped attributes parse
/// as absent.
struct ColumnMapping {
  char delimiter = ',';
  bool has_header = true;
  std::optional<int> timestamp;
  std::optional<int> mmsi;
  std::optional<int> lat;
  std::optional<int> lon;
  std::optional<int> nav_status;
  std::optional<int> sog;
  std::optional<int> cog;
  std::optional<int> heading;
  std::optional<int> vessel_type;
  std::optional<int> cargo_type;
  std::optional<int> width_m;
  std::optional<int> length_m;
  std::optional<int> draught_m;

  friend bool operator==(const ColumnMapping&, const ColumnMapping&) = default;
};

/// Column layout of the Danish Maritime Authority CSV dumps
/// ("# Timestamp,Type of mobile,MMSI,Latitude,Longitude,...").
ColumnMapping default_column_mapping();

/// Reads a key=value mapping file ("mmsi = 2", "delimiter = ;", "header = false").
/// Keys absent from the file keep their value from `base`.
ColumnMapping load_column_mapping(const std::filesystem::path& path,
                                  const ColumnMapping& base = default_column_mapping());
ColumnMapping parse_column_mapping(std::string_view text,
                                   const ColumnMapping& base = default_column_mapping());

enum class ParseFailureReason {
  missing_column,
  malformed_mmsi,
  bad_timestamp,
  coordinate_out_of_bounds,
  bad_field,
};

std::string_view to_string(ParseFailureReason r);

struct ParseFailure {
  ParseFailureReason reason;
  std::string detail;
};

using ParseResult = std::variant<AisRecord, ParseFailure>;

/// Splits one delimited row; double-quoted fields may contain the delimiter.
std::vector<std::string> split_row(std::string_view line, char delimiter);

ParseResult parse_record(std::string_view line, const ColumnMapping& mapping);

/// Inverse of parse_record on the present-field subset.
std::string serialize_record(const AisRecord& r, const ColumnMapping& mapping);

struct ParseStats {
  std::uint64_t lines = 0;
  std::uint64_t parsed = 0;
  std::uint64_t failed_by_reason[5] = {};

  std::uint64_t failed() const;
};

/// Parses every data line of a delimited file; failures are counted, never thrown.
std::vector<AisRecord> read_records(const std::filesystem::path& path, const ColumnMapping& mapping,
                                    ParseStats& stats);
std::vector<AisRecord> read_records(std::istream& in, const ColumnMapping& mapping,
                                    ParseStats& stats);

}  // namespace vkg
