#include "vkg/ais_record.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vkg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::string_view key;
  std::optional<int> ColumnMapping::*member;
};

constexpr Field kFields[] = {
    {"timestamp", &ColumnMapping::timestamp}, {"mmsi", &ColumnMapping::mmsi},
    {"lat", &ColumnMapping::lat},             {"lon", &ColumnMapping::lon},
    {"nav_status", &ColumnMapping::nav_status}, {"sog", &ColumnMapping::sog},
    {"cog", &ColumnMapping::cog},             {"heading", &ColumnMapping::heading},
    {"vessel_type", &ColumnMapping::vessel_type}, {"cargo_type", &ColumnMapping::cargo_type},
    {"width_m", &ColumnMapping::width_m},     {"length_m", &ColumnMapping::length_m},
    {"draught_m", &ColumnMapping::draught_m},
};

}  // namespace

std::string to_string(Mmsi id) { return std::to_string(id.value); }

std::string_view to_string(ParseFailureReason r) {
  switch (r) {
    case ParseFailureReason::missing_column: return "missing_column";
    case ParseFailureReason::malformed_mmsi: return "malformed_mmsi";
    case ParseFailureReason::bad_timestamp: return "bad_timestamp";
    case ParseFailureReason::coordinate_out_of_bounds: return "coordinate_out_of_bounds";
    case ParseFailureReason::bad_field: return "bad_field";
  }
  return "unknown";
}

std::uint64_t ParseStats::failed() const {
  std::uint64_t n = 0;
  for (auto c : failed_by_reason) n += c;
  return n;
}

ColumnMapping default_column_mapping() {
  ColumnMapping m;
  m.delimiter = ',';
  m.has_header = true;
  m.timestamp = 0;
  m.mmsi = 2;
  m.lat = 3;
  m.lon = 4;
  m.nav_status = 5;
  m.sog = 7;
  m.cog = 8;
  m.heading = 9;
  m.vessel_type = 13;
  m.cargo_type = 14;
  m.width_m = 15;
  m.length_m = 16;
  m.draught_m = 18;
  return m;
}

ColumnMapping parse_column_mapping(std::string_view text, const ColumnMapping& base) {
  ColumnMapping m = base;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("column mapping line " + std::to_string(lineno) +
                                  ": expected key = value");
    const auto key = trim(view.substr(0, eq));
    const auto raw_value = view.substr(eq + 1);
    const auto value = trim(raw_value);
    if (key == "delimiter") {
      if (value == "tab" || value == "\\t") {
        m.delimiter = '\t';
      } else if (value.size() == 1) {
        m.delimiter = value.front();
      } else if (value.empty() && raw_value.find(' ') != std::string_view::npos) {
        m.delimiter = ' ';
      } else {
        throw std::invalid_argument("column mapping: delimiter must be one character");
      }
      continue;
    }
    if (key == "header") {
      if (value == "true" || value == "1" || value == "yes") m.has_header = true;
      else if (value == "false" || value == "0" || value == "no") m.has_header = false;
      else throw std::invalid_argument("column mapping: header must be true/false");
      continue;
    }
    const auto it = std::find_if(std::begin(kFields), std::end(kFields),
                                 [&](const Field& f) { return f.key == key; });
    if (it == std::end(kFields))
      throw std::invalid_argument("column mapping: unknown key '" + std::string(key) + "'");
    if (value.empty() || value == "none" || value == "-") {
      m.*(it->member) = std::nullopt;
      continue;
    }
    int idx = -1;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), idx);
    if (ec != std::errc{} || ptr != value.data() + value.size() || idx < 0)
      throw std::invalid_argument("column mapping: bad column index for '" + std::string(key) +
                                  "'");
    m.*(it->member) = idx;
  }
  return m;
}

ColumnMapping load_column_mapping(const std::filesystem::path& path, const ColumnMapping& base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open column mapping " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_column_mapping(ss.str(), base);
}

std::vector<std::string> split_row(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && trim(cur).empty()) {
      cur.clear();
      quoted = true;
    } else if (c == delimiter) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r' || i + 1 != line.size()) {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

ParseResult parse_record(std::string_view line, const ColumnMapping& mapping) {
  const auto cols = split_row(line, mapping.delimiter);
  auto cell = [&](const std::optional<int>& idx) -> std::optional<std::string_view> {
    if (!idx) return std::nullopt;
    if (static_cast<std::size_t>(*idx) >= cols.size()) return std::nullopt;
    const auto v = trim(cols[static_cast<std::size_t>(*idx)]);
    if (v.empty()) return std::nullopt;
    return v;
  };
  auto fail = [](ParseFailureReason r, std::string detail) -> ParseResult {
    return ParseFailure{r, std::move(detail)};
  };
  auto required_present = [&](const std::optional<int>& idx) {
    return idx && static_cast<std::size_t>(*idx) < cols.size();
  };
  if (!required_present(mapping.mmsi) || !required_present(mapping.timestamp) ||
      !required_present(mapping.lat) || !required_present(mapping.lon))
    return fail(ParseFailureReason::missing_column, "row has too few columns for the mapping");

  AisRecord r;

  const auto mmsi = cell(mapping.mmsi);
  if (!mmsi || mmsi->size() > 9 ||
      !std::all_of(mmsi->begin(), mmsi->end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return fail(ParseFailureReason::malformed_mmsi, "MMSI must have 1-9 digits");
  std::uint32_t id = 0;
  std::from_chars(mmsi->data(), mmsi->data() + mmsi->size(), id);
  if (id == 0) return fail(ParseFailureReason::malformed_mmsi, "MMSI must be nonzero");
  r.vessel_id = Mmsi{id};

  const auto ts_cell = cell(mapping.timestamp);
  const auto ts = ts_cell ? parse_timestamp(*ts_cell) : std::nullopt;
  if (!ts) return fail(ParseFailureReason::bad_timestamp, "unparseable timestamp");
  r.timestamp = *ts;

  const auto lat_cell = cell(mapping.lat);
  const auto lon_cell = cell(mapping.lon);
  const auto lat = lat_cell ? to_double(*lat_cell) : std::nullopt;
  const auto lon = lon_cell ? to_double(*lon_cell) : std::nullopt;
  if (!lat.has_value() || !lon.has_value())
    return fail(ParseFailureReason::coordinate_out_of_bounds, "missing coordinate");
  r.lat = lat.value();
  r.lon = lon.value();
  if (!(r.lat >= -90.0 && r.lat <= 90.0) || !(r.lon >= -180.0 && r.lon <= 180.0))
    return fail(ParseFailureReason::coordinate_out_of_bounds, "coordinate out of bounds");

  // Numeric optional fields: empty -> absent, unparseable -> failure.
  auto number = [&](const std::optional<int>& idx, const char* name,
                    std::optional<double>& out) -> std::optional<ParseFailure> {
    const auto c = cell(idx);
    if (!c) return std::nullopt;
    const auto v = to_double(*c);
    if (!v) return ParseFailure{ParseFailureReason::bad_field, std::string(name) + " not numeric"};
    out = v;
    return std::nullopt;
  };
  for (auto [idx, name, out] :
       {std::tuple{mapping.sog, "sog", &r.sog}, std::tuple{mapping.cog, "cog", &r.cog},
        std::tuple{mapping.heading, "heading", &r.heading},
        std::tuple{mapping.length_m, "length", &r.length_m},
        std::tuple{mapping.width_m, "width", &r.width_m},
        std::tuple{mapping.draught_m, "draught", &r.draught_m}}) {
    if (auto f = number(idx, name, *out)) return *f;
  }

  if (r.heading && *r.heading == 511.0) r.heading.reset();
  if (r.cog && *r.cog == 360.0) r.cog.reset();
  if (r.sog && *r.sog < 0.0) return fail(ParseFailureReason::bad_field, "negative sog");
  if (r.cog && !(*r.cog >= 0.0 && *r.cog < 360.0))
    return fail(ParseFailureReason::bad_field, "cog out of range");
  if (r.heading && !(*r.heading >= 0.0 && *r.heading < 360.0))
    return fail(ParseFailureReason::bad_field, "heading out of range");
  for (auto* dim : {&r.length_m, &r.width_m, &r.draught_m})
    if (*dim && **dim < 0.0) return fail(ParseFailureReason::bad_field, "negative dimension");

  if (const auto c = cell(mapping.nav_status)) r.nav_status = std::string(*c);
  if (const auto c = cell(mapping.vessel_type)) r.vessel_type = std::string(*c);
  if (const auto c = cell(mapping.cargo_type)) r.cargo_type = std::string(*c);
  return r;
}

std::string serialize_record(const AisRecord& r, const ColumnMapping& mapping) {
  int width = 0;
  for (const auto& f : kFields)
    if (const auto& idx = mapping.*(f.member)) width = std::max(width, *idx + 1);
  std::vector<std::string> cols(static_cast<std::size_t>(width));
  auto put = [&](const std::optional<int>& idx, std::string value) {
    if (idx) cols[static_cast<std::size_t>(*idx)] = std::move(value);
  };
  auto put_num = [&](const std::optional<int>& idx, const std::optional<double>& v) {
    if (v) put(idx, format_double(*v));
  };
  put(mapping.timestamp, format_timestamp_plain(r.timestamp));
  put(mapping.mmsi, to_string(r.vessel_id));
  put(mapping.lat, format_double(r.lat));
  put(mapping.lon, format_double(r.lon));
  put(mapping.nav_status, r.nav_status);
  put_num(mapping.sog, r.sog);
  put_num(mapping.cog, r.cog);
  put_num(mapping.heading, r.heading);
  put(mapping.vessel_type, r.vessel_type);
  if (r.cargo_type) put(mapping.cargo_type, *r.cargo_type);
  put_num(mapping.width_m, r.width_m);
  put_num(mapping.length_m, r.length_m);
  put_num(mapping.draught_m, r.draught_m);

  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out.push_back(mapping.delimiter);
    const auto& c = cols[i];
    if (c.find(mapping.delimiter) != std::string::npos || c.find('"') != std::string::npos) {
      out.push_back('"');
      for (char ch : c) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
      }
      out.push_back('"');
    } else {
      out += c;
    }
  }
  return out;
}

std::vector<AisRecord> read_records(std::istream& in, const ColumnMapping& mapping,
                                    ParseStats& stats) {
  std::vector<AisRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (mapping.has_header) continue;
    }
    if (trim(line).empty()) continue;
    ++stats.lines;
    auto result = parse_record(line, mapping);
    if (auto* rec = std::get_if<AisRecord>(&result)) {
      ++stats.parsed;
      out.push_back(std::move(*rec));
    } else {
      ++stats.failed_by_reason[static_cast<int>(std::get<ParseFailure>(result).reason)];
    }
  }
  return out;
}

std::vector<AisRecord> read_records(const std::filesystem::path& path, const ColumnMapping& mapping,
                                    ParseStats& stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_records(in, mapping, stats);
}

}  // namespace vkg
