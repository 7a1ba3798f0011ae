#include <doctest.h>

#include <map>

#include <fstream>
#include <random>
#include <sstream>

#include "synthetic.hpp"
#include "vkg/ais_record.hpp"

using namespace vkg;

namespace {

ParseFailureReason reason_of(const ParseResult& r) {
  REQUIRE(std::holds_alternative<ParseFailure>(r));
  return std::get<ParseFailure>(r).reason;
}

const AisRecord& record_of(const ParseResult& r) {
  if (auto* f = std::get_if<ParseFailure>(&r)) FAIL(f->detail);
  return std::get<AisRecord>(r);
}

// A DMA-layout row with the given overrides.
std::string dma_row(std::map<int, std::string> cells) {
  std::vector<std::string> row = {"01/03/2024 12:00:00", "Class A", "219000001", "57.050000", "10.100000",
                                  "Under way using engine", "0.0", "12.3", "45.0", "44", "Unknown", "OZ1",
                                  "NAME", "Cargo", "", "18", "120", "GPS", "6.8", "", "", "AIS", "", "", "", ""};
  for (auto& [i, v] : cells) row[i] = v;
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
  return out;
}

}  // namespace

TEST_CASE("a row with padded fields parses through a custom column mapping") {
  ColumnMapping m;
  m.timestamp = 0;
  m.mmsi = 2;
  m.lat = 3;
  m.lon = 4;
  m.nav_status = 5;
  m.sog = 7;
  m.cog = 8;
  m.heading = 9;
  m.vessel_type = 10;
  const auto r = record_of(parse_record(
      "2024-01-01 00:00:00, Class A, 219000001, 57.05, 10.10, Under way using engine, , 12.3, 45.0, 44, Cargo, x",
      m));
  CHECK(r.vessel_id == Mmsi{219000001});
  CHECK(r.sog == 12.3);
  CHECK(r.vessel_type == "Cargo");
  CHECK(r.nav_status == "Under way using engine");
  CHECK(r.cog == 45.0);
  CHECK(r.heading == 44.0);
  CHECK(r.timestamp == from_epoch_seconds(1704067200));
}

TEST_CASE("sample file row agrees with an independent column read") {
  std::ifstream in(std::string(VKG_SOURCE_DIR) + "/data/sample/aisdk-2024-03-01.csv");
  REQUIRE(in);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  // Independent read: plain comma split, no quoting in this file.
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  const auto r = record_of(parse_record(line, default_column_mapping()));
  CHECK(r.vessel_id.value == std::stoul(cells[2]));
  CHECK(r.lat == std::stod(cells[3]));
  CHECK(r.lon == std::stod(cells[4]));
  CHECK(r.nav_status == cells[5]);
  CHECK(r.sog == std::stod(cells[7]));
  CHECK(r.vessel_type == cells[13]);
  CHECK(r.width_m == std::stod(cells[15]));
  CHECK(r.length_m == std::stod(cells[16]));
  CHECK(r.draught_m == std::stod(cells[18]));
}

TEST_CASE("sentinels and empty cells become absent") {
  const auto m = default_column_mapping();
  const auto r = record_of(parse_record(dma_row({{9, "511"}, {8, "360"}, {7, ""}, {18, ""}}), m));
  CHECK(!r.heading);
  CHECK(!r.cog);
  CHECK(!r.sog);
  CHECK(!r.draught_m);
  CHECK(!r.cargo_type);
  const auto unknown = record_of(parse_record(dma_row({{5, ""}, {13, ""}}), m));
  CHECK(unknown.nav_status == "Unknown");
  CHECK(unknown.vessel_type == "Unknown");
}

TEST_CASE("parse failures carry their reason") {
  const auto m = default_column_mapping();
  CHECK(reason_of(parse_record(dma_row({{3, "91.0"}}), m)) == ParseFailureReason::coordinate_out_of_bounds);
  CHECK(reason_of(parse_record(dma_row({{4, "-180.5"}}), m)) == ParseFailureReason::coordinate_out_of_bounds);
  CHECK(reason_of(parse_record(dma_row({{2, "21900X001"}}), m)) == ParseFailureReason::malformed_mmsi);
  CHECK(reason_of(parse_record(dma_row({{2, "1234567890"}}), m)) == ParseFailureReason::malformed_mmsi);
  CHECK(reason_of(parse_record(dma_row({{0, "not a time"}}), m)) == ParseFailureReason::bad_timestamp);
  CHECK(reason_of(parse_record("01/03/2024 12:00:00,Class A", m)) == ParseFailureReason::missing_column);
  CHECK(reason_of(parse_record(dma_row({{7, "-1"}}), m)) == ParseFailureReason::bad_field);
  CHECK(reason_of(parse_record(dma_row({{7, "fast"}}), m)) == ParseFailureReason::bad_field);
}

TEST_CASE("quoted cells may contain the delimiter") {
  const auto cells = split_row(R"(a,"b,c",,"d ""q""")", ',');
  REQUIRE(cells.size() == 4);
  CHECK(cells[1] == "b,c");
  CHECK(cells[2] == "");
  CHECK(cells[3] == R"(d "q")");
}

TEST_CASE("serialize then parse preserves present fields") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180), sog(0, 30), ang(0, 359.9);
  std::bernoulli_distribution present(0.6);
  const auto m = default_column_mapping();
  for (int i = 0; i < 300; ++i) {
    AisRecord r = testing::make_record(100000000 + i, i * 7.0, std::round(lat(rng) * 1e6) / 1e6,
                                       std::round(lon(rng) * 1e6) / 1e6);
    if (present(rng)) r.sog = std::round(sog(rng) * 10) / 10;
    if (present(rng)) r.cog = std::round(ang(rng) * 10) / 10;
    if (present(rng)) r.heading = std::round(ang(rng));
    if (present(rng)) r.length_m = 100;
    if (present(rng)) r.draught_m = 5.5;
    if (present(rng)) r.cargo_type = "Category X";
    r.nav_status = present(rng) ? "Moored" : "Unknown";
    const auto back = record_of(parse_record(serialize_record(r, m), m));
    CHECK(back == r);
  }
}

TEST_CASE("column mapping files override the defaults") {
  const auto m = parse_column_mapping("# semicolon export\ndelimiter = ;\nheader = false\nmmsi = 0\ntimestamp=1\nlat=2\nlon=3\nsog=4\n");
  CHECK(m.delimiter == ';');
  CHECK(!m.has_header);
  CHECK(m.mmsi == 0);
  CHECK(m.cog == default_column_mapping().cog);
  CHECK_THROWS(parse_column_mapping("speed = 3\n"));
  const auto r = record_of(parse_record("219000001;2024-03-01 00:00:00;57.1;10.2;9.5", m));
  CHECK(r.sog == 9.5);
}

TEST_CASE("read_records counts failures without aborting") {
  std::stringstream in;
  in << "# Timestamp,...\n" << dma_row({}) << "\n" << dma_row({{3, "95"}}) << "\n\n"
     << dma_row({{2, "x"}}) << "\n" << dma_row({{0, "01/03/2024 12:01:00"}}) << "\n";
  ParseStats stats;
  const auto records = read_records(in, default_column_mapping(), stats);
  CHECK(records.size() == 2);
  CHECK(stats.parsed == 2);
  CHECK(stats.failed() == 2);
  CHECK(stats.failed_by_reason[static_cast<int>(ParseFailureReason::coordinate_out_of_bounds)] == 1);
  CHECK(stats.failed_by_reason[static_cast<int>(ParseFailureReason::malformed_mmsi)] == 1);
}
