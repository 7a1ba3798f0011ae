#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "synthetic.hpp"
#include "vkg/archive.hpp"
#include "vkg/data_source.hpp"

using namespace vkg;
namespace fs = std::filesystem;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using testing::TempDir;

const fs::path kFixtures = VKG_FIXTURE_DIR;

// Serves fixture files on localhost and counts requests.
struct FixtureServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};

  FixtureServer() {
    server.Get(R"(/ais/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const auto file = kFixtures / req.matches[1].str();
      if (!fs::exists(file)) {
        res.status = 404;
        return;
      }
      res.set_content(slurp(file), "application/octet-stream");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FixtureServer() {
    server.stop();
    thread.join();
  }
  std::string url(const std::string& name) const {
    return "http://127.0.0.1:" + std::to_string(port) + "/ais/" + name;
  }
};

}  // namespace

TEST_CASE("resolve yields one ascending entry per day") {
  SourceConfig cfg;
  cfg.url_template = "https://example.org/aisdk-{date}.zip";
  cfg.date_from = cfg.date_to = ymd(2024, 3, 1);
  auto single = resolve(cfg);
  REQUIRE(single.size() == 1);
  CHECK(single[0].location == "https://example.org/aisdk-2024-03-01.zip");
  CHECK(single[0].remote);

  cfg.date_to = ymd(2024, 3, 3);
  const auto three = resolve(cfg);
  REQUIRE(three.size() == 3);
  CHECK(three[0].date == ymd(2024, 3, 1));
  CHECK(three[2].location == "https://example.org/aisdk-2024-03-03.zip");
  CHECK(resolve(cfg) == three);

  cfg.date_from = ymd(2024, 2, 28);
  CHECK(resolve(cfg).size() == 5);  // leap year
}

TEST_CASE("resolve rejects bad templates and ranges") {
  SourceConfig cfg;
  cfg.date_from = cfg.date_to = ymd(2024, 3, 1);
  cfg.url_template = "https://example.org/static.zip";
  CHECK_THROWS_AS(resolve(cfg), InvalidTemplate);
  cfg.url_template = "https://example.org/{date}/{date}.zip";
  CHECK_THROWS_AS(resolve(cfg), InvalidTemplate);
  cfg.url_template = "";
  CHECK_THROWS_AS(resolve(cfg), InvalidTemplate);
  cfg.url_template = "/data/ais";
  const auto local = resolve(cfg);
  CHECK(!local[0].remote);
  CHECK(local[0].location == "/data/ais/2024-03-01.csv");
  cfg.date_from = ymd(2024, 3, 2);
  CHECK_THROWS_AS(resolve(cfg), InvalidSourceConfig);
}

TEST_CASE("archives expand to the delimited member") {
  TempDir tmp;
  const auto plain = slurp(kFixtures / "small.csv");
  CHECK(detect_archive(kFixtures / "small.csv") == ArchiveKind::none);
  CHECK(detect_archive(kFixtures / "small.csv.gz") == ArchiveKind::gzip);
  CHECK(detect_archive(kFixtures / "small_deflate.zip") == ArchiveKind::zip);
  gunzip_file(kFixtures / "small.csv.gz", tmp.path / "a.csv");
  CHECK(slurp(tmp.path / "a.csv") == plain);
  unzip_first_delimited(kFixtures / "small_deflate.zip", tmp.path / "b.csv");
  CHECK(slurp(tmp.path / "b.csv") == plain);
  unzip_first_delimited(kFixtures / "small_stored.zip", tmp.path / "c.csv");
  CHECK(slurp(tmp.path / "c.csv") == plain);
  CHECK_THROWS_AS(unzip_first_delimited(kFixtures / "small.csv", tmp.path / "d.csv"), ArchiveError);
  CHECK_THROWS_AS(gunzip_file(kFixtures / "small.csv", tmp.path / "e.csv"), ArchiveError);
}

TEST_CASE("local fetch copies or expands into the cache layout") {
  TempDir tmp;
  const auto plain = slurp(kFixtures / "small.csv");
  for (const auto* name : {"small.csv", "small.csv.gz", "small_deflate.zip", "small_stored.zip"}) {
    TempDir cache;
    const SourceEntry e{ymd(2024, 3, 1), (kFixtures / name).string(), false};
    const auto path = fetch(e, cache.path, "local");
    CHECK(path == cache.path / "local" / "2024-03-01.csv");
    CHECK_MESSAGE(slurp(path) == plain, name);
  }
}

TEST_CASE("local directory sources pick the file carrying the date") {
  TempDir src, cache;
  fs::copy_file(kFixtures / "small_deflate.zip", src.path / "aisdk-2024-03-01.zip");
  SourceConfig cfg;
  cfg.url_template = src.path.string();
  cfg.date_from = ymd(2024, 3, 1);
  cfg.date_to = ymd(2024, 3, 2);
  const auto entries = resolve(cfg);
  CHECK(slurp(fetch(entries[0], cache.path, "dir")) == slurp(kFixtures / "small.csv"));
  CHECK_THROWS_AS(fetch(entries[1], cache.path, "dir"), FetchFailure);
}

TEST_CASE("remote fetch downloads once and is idempotent") {
  FixtureServer srv;
  TempDir cache;
  const SourceEntry e{ymd(2024, 3, 1), srv.url("small_deflate.zip"), true};
  const auto first = fetch(e, cache.path, "remote");
  CHECK(srv.requests == 1);
  CHECK(slurp(first) == slurp(kFixtures / "small.csv"));
  const auto second = fetch(e, cache.path, "remote");
  CHECK(second == first);
  CHECK(srv.requests == 1);

  const SourceEntry gz{ymd(2024, 3, 2), srv.url("small.csv.gz"), true};
  CHECK(slurp(fetch(gz, cache.path, "remote")) == slurp(kFixtures / "small.csv"));
}

TEST_CASE("remote 404 is a fetch failure and leaves no partial file") {
  FixtureServer srv;
  TempDir cache;
  const SourceEntry e{ymd(2024, 3, 1), srv.url("missing.zip"), true};
  CHECK_THROWS_AS(fetch(e, cache.path, "remote"), FetchFailure);
  CHECK(!fs::exists(cache_path(cache.path, "remote", e.date)));
  for (const auto& de : fs::recursive_directory_iterator(cache.path)) CHECK(!de.is_regular_file());
}

TEST_CASE("warm cache short-circuits even unreachable remotes") {
  TempDir cache;
  const SourceEntry e{ymd(2024, 3, 1), "http://127.0.0.1:1/never", true};
  const auto target = cache_path(cache.path, "remote", e.date);
  fs::create_directories(target.parent_path());
  std::ofstream(target) << "x\n";
  CHECK(fetch(e, cache.path, "remote") == target);
}

TEST_CASE("time windows filter by time of day and may wrap midnight") {
  CHECK(parse_time_of_day("06:30") == 6 * 3600 + 1800);
  CHECK(parse_time_of_day("24:00") == 86400);
  CHECK(parse_time_of_day("23:59:59") == 86399);
  CHECK(!parse_time_of_day("24:01"));
  CHECK(!parse_time_of_day("6:30"));
  CHECK(format_time_of_day(6 * 3600 + 1800) == "06:30");
  CHECK(format_time_of_day(3661) == "01:01:01");

  std::vector<AisRecord> recs;
  for (int h = 0; h < 24; ++h) recs.push_back(testing::make_record(1, h * 3600.0, 57, 10));
  const auto day = filter_time_window(recs, TimeWindow{6 * 3600, 18 * 3600});
  CHECK(day.size() == 12);
  CHECK(seconds_of_day(day.front().timestamp) == 6 * 3600);
  const auto night = filter_time_window(recs, TimeWindow{22 * 3600, 2 * 3600});
  REQUIRE(night.size() == 4);
  CHECK(seconds_of_day(night[0].timestamp) == 0);
  CHECK(seconds_of_day(night[3].timestamp) == 23 * 3600);
  CHECK(filter_time_window(recs, TimeWindow{}).size() == 24);
}
