#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <cmath>
#include <future>
#include <random>
#include <set>
#include <thread>

#include "synthetic.hpp"
#include "vkg/service.hpp"

using namespace vkg;

namespace {

ApiRequest get(const std::string& path, std::multimap<std::string, std::string> query = {}) {
  return ApiRequest{"GET", std::string(kApiPrefix) + path, std::move(query), ""};
}

Timestamp at(double t_s) { return testing::make_record(1, t_s, 0, 0).timestamp; }

Trajectory box_trajectory(std::uint32_t mmsi, double t0_s, double lat, double lon, std::size_t n) {
  Trajectory t{Mmsi{mmsi}, {}};
  for (std::size_t i = 0; i < n; ++i)
    t.records.push_back(testing::make_record(mmsi, t0_s + 60.0 * static_cast<double>(i),
                                             lat + 0.01 * static_cast<double>(i), lon, 10.0, 0.0));
  return t;
}

/// Thirty short trajectories spread over a few degrees and a day.
Snapshot filter_snapshot() {
  Snapshot s;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> lat(54.0, 58.0), lon(7.0, 13.0), t0(0.0, 86400.0);
  for (std::uint32_t i = 0; i < 30; ++i)
    s.trajectories.push_back(box_trajectory(211000000 + i, t0(rng), lat(rng), lon(rng), 5));
  return s;
}

const JobOutput& sample_output() {
  static const JobOutput out = [] {
    testing::TempDir tmp;
    JobTracker t;
    return run_full_job(testing::sample_job_config(tmp.path), default_registry(), t);
  }();
  return out;
}

std::filesystem::path fs_sample() {
  return std::filesystem::path(VKG_SOURCE_DIR) / "data/sample/aisdk-2024-03-01.csv";
}

std::set<std::uint32_t> mmsis(const Json& items) {
  std::set<std::uint32_t> out;
  for (const auto& i : items) out.insert(i.at("mmsi").get<std::uint32_t>());
  return out;
}

}  // namespace

TEST_CASE("responses carry the schema version, errors carry a code") {
  Service svc({testing::TempDir().path});
  auto r = svc.handle(get("/health"));
  CHECK(r.status == 200);
  CHECK(r.body.at("schema_version") == kSchemaVersion);
  CHECK(r.body.at("status") == "ok");

  auto e = svc.handle(get("/nowhere"));
  CHECK(e.status == 404);
  CHECK(e.body.at("schema_version") == kSchemaVersion);
  CHECK(e.body.at("error").at("code") == "not_found");
  CHECK(e.body.at("error").at("message").is_string());

  CHECK(svc.handle(ApiRequest{"GET", "/other/health", {}, ""}).status == 404);
  CHECK(svc.handle(ApiRequest{"DELETE", "/api/v1/health", {}, ""}).status == 405);
  CHECK(svc.handle(get("/health", {{"x", "1"}})).status == 400);
}

TEST_CASE("matches follows the filter semantics") {
  const auto t = box_trajectory(5, 1000, 57.0, 10.0, 5);  // lat 57.00..57.04, t 1000..1240
  TrajectoryFilter f;
  CHECK(matches(t, f));
  f.mmsi = Mmsi{6};
  CHECK_FALSE(matches(t, f));
  f.mmsi = Mmsi{5};
  f.time_from = at(1240);
  CHECK(matches(t, f));
  f.time_from = at(1241);
  CHECK_FALSE(matches(t, f));
  f.time_from.reset();
  f.time_to = at(1000);
  CHECK(matches(t, f));
  f.time_to = at(999);
  CHECK_FALSE(matches(t, f));
  f.time_to.reset();
  f.bbox = TrajectoryFilter::Box{10.0, 57.04, 10.5, 58.0};
  CHECK(matches(t, f));
  f.bbox = TrajectoryFilter::Box{10.0, 57.041, 10.5, 58.0};
  CHECK_FALSE(matches(t, f));
}

TEST_CASE("trajectory listing agrees with a brute-force filter") {
  Service svc({testing::TempDir().path});
  const Snapshot snap = filter_snapshot();
  svc.publish(snap);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::multimap<std::string, std::string> q;
    TrajectoryFilter f;
    if (u(rng) < 0.3) {
      const auto& pick = snap.trajectories[static_cast<std::size_t>(u(rng) * 29.99)];
      f.mmsi = pick.vessel_id;
      q.emplace("mmsi", to_string(pick.vessel_id));
    }
    if (u(rng) < 0.5) {
      double a = u(rng) * 90000, b = u(rng) * 90000;
      if (a > b) std::swap(a, b);
      f.time_from = at(a);
      f.time_to = at(b);
      q.emplace("time_from", format_timestamp(*f.time_from));
      q.emplace("time_to", format_timestamp(*f.time_to));
    }
    if (u(rng) < 0.6) {
      // Six decimals so the query text denotes exactly the oracle's box.
      auto r6 = [](double x) { return std::round(x * 1e6) / 1e6; };
      const double lat0 = r6(54 + 4 * u(rng)), lon0 = r6(7 + 6 * u(rng));
      f.bbox = TrajectoryFilter::Box{lon0, lat0, r6(lon0 + 3 * u(rng)), r6(lat0 + 2 * u(rng))};
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f", f.bbox->min_lon, f.bbox->min_lat,
                    f.bbox->max_lon, f.bbox->max_lat);
      q.emplace("bbox", buf);
    }

    std::set<std::uint32_t> expected;
    for (const auto& t : snap.trajectories) {
      bool ok = !f.mmsi || t.vessel_id == *f.mmsi;
      if (f.time_from) ok = ok && t.records.back().timestamp >= *f.time_from;
      if (f.time_to) ok = ok && t.records.front().timestamp <= *f.time_to;
      if (f.bbox) {
        bool inside = false;
        for (const auto& r : t.records)
          inside = inside || (r.lon >= f.bbox->min_lon && r.lon <= f.bbox->max_lon &&
                              r.lat >= f.bbox->min_lat && r.lat <= f.bbox->max_lat);
        ok = ok && inside;
      }
      if (ok) expected.insert(t.vessel_id.value);
    }

    const auto r = svc.handle(get("/trajectories", q));
    REQUIRE(r.status == 200);
    CHECK(r.body.at("total") == expected.size());
    CHECK(mmsis(r.body.at("items")) == expected);
  }
}

TEST_CASE("trajectory summaries and paging") {
  Service svc({testing::TempDir().path});
  svc.publish(filter_snapshot());
  auto r = svc.handle(get("/trajectories", {{"offset", "10"}, {"limit", "7"}}));
  REQUIRE(r.status == 200);
  CHECK(r.body.at("total") == 30);
  REQUIRE(r.body.at("items").size() == 7);
  CHECK(r.body.at("items")[0].at("mmsi") == 211000010);
  const auto& s = r.body.at("items")[0];
  CHECK(s.at("record_count") == 5);
  CHECK(s.at("vessel_type") == "Cargo");
  CHECK(s.at("bbox").size() == 4);
  CHECK(s.at("bbox")[3].get<double>() - s.at("bbox")[1].get<double>() == doctest::Approx(0.04));

  CHECK(svc.handle(get("/trajectories", {{"offset", "40"}})).body.at("items").empty());
}

TEST_CASE("malformed or unknown query parameters are rejected") {
  Service svc({testing::TempDir().path});
  svc.publish(filter_snapshot());
  for (std::multimap<std::string, std::string> q : std::vector<std::multimap<std::string, std::string>>{
           {{"mmsi", "abc"}},
           {{"mmsi", "0"}},
           {{"bbox", "1,2,3"}},
           {{"bbox", "3,2,1,4"}},
           {{"bbox", "1,2,x,4"}},
           {{"bbox", "-200,0,0,1"}},
           {{"time_from", "yesterday"}},
           {{"time_from", "2024-03-02T00:00:00Z"}, {"time_to", "2024-03-01T00:00:00Z"}},
           {{"limit", "0"}},
           {{"limit", "-1"}},
           {{"offset", "1.5"}},
           {{"colour", "red"}},
           {{"mmsi", "211000001"}, {"mmsi", "211000002"}},
       }) {
    const auto r = svc.handle(get("/trajectories", q));
    CHECK(r.status == 400);
    CHECK(r.body.at("error").at("code") == "bad_request");
  }
}

TEST_CASE("segments are served in time order with imputed pieces between raw ones") {
  using testing::make_record;
  Snapshot s;
  const std::uint32_t m = 219000009;
  Trajectory t{Mmsi{m}, {}};
  for (double ts : {0.0, 60.0, 120.0, 2000.0, 2060.0, 2120.0}) t.records.push_back(make_record(m, ts, 57, 10));
  s.trajectories.push_back(t);
  Segment a{"a", Mmsi{m}, {t.records[0], t.records[1], t.records[2]}, Provenance::raw, {}, {}};
  Segment b{"b", Mmsi{m}, {t.records[3], t.records[4], t.records[5]}, Provenance::raw, {}, {}};
  s.segments = {b, a};
  ImputedSegment imp;
  imp.segment = Segment{"i", Mmsi{m}, {t.records[2], make_record(m, 1000, 57, 10), t.records[3]},
                        Provenance::imputed, {}, {}};
  imp.gap_id = "gap-1";
  imp.method_key = "linear";
  imp.fallback_used = true;
  s.imputed.push_back(imp);

  Service svc({testing::TempDir().path});
  svc.publish(s);
  auto r = svc.handle(get("/trajectories/219000009/segments"));
  REQUIRE(r.status == 200);
  const auto& segs = r.body.at("segments");
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].at("segment_id") == "a");
  CHECK(segs[1].at("segment_id") == "i");
  CHECK(segs[1].at("provenance") == "imputed");
  CHECK(segs[1].at("gap_id") == "gap-1");
  CHECK(segs[1].at("fallback_used") == true);
  CHECK(segs[2].at("segment_id") == "b");
  CHECK_FALSE(segs[0].contains("gap_id"));

  CHECK(svc.handle(get("/trajectories/219000008/segments")).status == 404);
  CHECK(svc.handle(get("/trajectories/abc/segments")).status == 400);
}

TEST_CASE("reports, subgraphs and knowledge graph browsing over a real job") {
  Service svc({testing::TempDir().path});
  svc.publish(make_snapshot(sample_output()));
  const auto snap = svc.snapshot();
  REQUIRE_FALSE(snap->reports.empty());

  for (const auto& [id, report] : snap->reports) {
    auto r = svc.handle(get("/segments/" + id + "/report"));
    REQUIRE(r.status == 200);
    CHECK(r.body.at("report") == Json(report));

    auto sg = svc.handle(get("/segments/" + id + "/subgraph"));
    REQUIRE(sg.status == 200);
    std::set<std::string> nodes;
    for (const auto& n : sg.body.at("subgraph").at("nodes")) nodes.insert(n.at("id").get<std::string>());
    for (const auto& e : sg.body.at("subgraph").at("edges")) {
      CHECK(nodes.contains(e.at("from").get<std::string>()));
      CHECK(nodes.contains(e.at("to").get<std::string>()));
    }
  }
  CHECK(svc.handle(get("/segments/nope/report")).status == 404);
  CHECK(svc.handle(get("/segments/nope/subgraph")).status == 404);

  auto all = svc.handle(get("/kg/nodes"));
  REQUIRE(all.status == 200);
  CHECK(all.body.at("total") == snap->graph.nodes().size());

  auto methods = svc.handle(get("/kg/nodes", {{"kind", "method"}}));
  REQUIRE(methods.status == 200);
  CHECK(methods.body.at("total").get<std::size_t>() > 0);
  for (const auto& n : methods.body.at("items")) CHECK(n.at("kind") == "method");

  auto port = svc.handle(get("/kg/nodes", {{"q", "PORT"}}));
  REQUIRE(port.status == 200);
  for (const auto& n : port.body.at("items"))
    CHECK(n.at("id").get<std::string>().find("port") != std::string::npos);

  CHECK(svc.handle(get("/kg/nodes", {{"kind", "vessel"}})).status == 400);

  const NodeId first = snap->graph.nodes().begin()->first;
  auto node = svc.handle(get("/kg/node", {{"id", to_string(first)}}));
  REQUIRE(node.status == 200);
  CHECK(node.body.at("report").at("node").at("id") == to_string(first));

  auto nb = svc.handle(get("/kg/neighbors", {{"id", to_string(first)}}));
  REQUIRE(nb.status == 200);
  CHECK(nb.body.at("neighbors").size() == neighbors(snap->graph, first).size());

  CHECK(svc.handle(get("/kg/node", {{"id", "behavior/flying"}})).status == 404);
  CHECK(svc.handle(get("/kg/node", {{"id", "nonsense"}})).status == 400);
  CHECK(svc.handle(get("/kg/node")).status == 400);
  CHECK(svc.handle(get("/kg/neighbors", {{"id", "method/warp"}})).status == 404);
}

TEST_CASE("a submitted job publishes a new snapshot and holds the only slot") {
  testing::TempDir data;
  Service svc({data.path});
  const Json body = testing::sample_job_config(data.path);

  auto r = svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, body.dump()});
  REQUIRE(r.status == 202);
  const std::string id = r.body.at("job_id");

  svc.wait_for_job();

  auto st = svc.handle(get("/jobs/" + id));
  REQUIRE(st.status == 200);
  CHECK(st.body.at("job").at("phase") == "done");
  CHECK(svc.snapshot()->trajectories.size() == sample_output().trajectories.size());
  CHECK(svc.snapshot()->graph == sample_output().graph);

  auto list = svc.handle(get("/trajectories"));
  CHECK(list.body.at("total") == sample_output().trajectories.size());

  // A fresh service sees the persisted result.
  Service reloaded({data.path});
  reloaded.load();
  CHECK(reloaded.snapshot()->graph == sample_output().graph);
  CHECK(reloaded.handle(get("/jobs/" + id)).body.at("job").at("phase") == "done");

  CHECK(svc.handle(get("/jobs/job-999999")).status == 404);
  CHECK(svc.handle(ApiRequest{"GET", "/api/v1/jobs", {}, ""}).status == 405);
}

TEST_CASE("a second job is refused while the first is still downloading") {
  // The download blocks until the test releases it.
  std::promise<void> release;
  std::shared_future<void> gate = release.get_future().share();
  httplib::Server files;
  files.Get(R"(/ais/(.+))", [&](const httplib::Request&, httplib::Response& res) {
    gate.wait();
    res.set_content(read_file(fs_sample()), "text/csv");
  });
  const int port = files.bind_to_any_port("127.0.0.1");
  std::thread th([&] { files.listen_after_bind(); });
  files.wait_until_ready();

  testing::TempDir data;
  Service svc({data.path});
  auto cfg = testing::sample_job_config(data.path);
  cfg.source.url_template = "http://127.0.0.1:" + std::to_string(port) + "/ais/aisdk-{date}.csv";

  auto first = svc.submit_job(cfg);
  REQUIRE(first);
  auto r = svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, Json(cfg).dump()});
  CHECK(r.status == 409);
  CHECK(r.body.at("error").at("code") == "conflict");
  CHECK_FALSE(svc.submit_job(cfg));
  auto running = svc.handle(get("/jobs/" + *first));
  CHECK(running.body.at("job").at("phase") == "downloading");

  release.set_value();
  svc.wait_for_job();
  CHECK(svc.handle(get("/jobs/" + *first)).body.at("job").at("phase") == "done");
  CHECK(svc.snapshot()->graph == sample_output().graph);

  // Once finished the slot is free again.
  auto second = svc.submit_job(cfg);
  REQUIRE(second);
  CHECK(*second != *first);
  svc.wait_for_job();
  files.stop();
  th.join();
}

TEST_CASE("job submissions are validated") {
  testing::TempDir data;
  Service svc({data.path});
  Json body = testing::sample_job_config(data.path);

  Json reversed = body;
  reversed["source"]["date_from"] = "2024-03-05";
  auto r = svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, reversed.dump()});
  CHECK(r.status == 400);
  CHECK(r.body.at("error").at("code") == "invalid_job_config");

  Json bad_date = body;
  bad_date["source"]["date_to"] = "2024-02-30";
  CHECK(svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, bad_date.dump()}).status == 400);

  Json extra = body;
  extra["turbo"] = true;
  CHECK(svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, extra.dump()}).status == 400);

  CHECK(svc.handle(ApiRequest{"POST", "/api/v1/jobs", {}, "{not json"}).status == 400);
  CHECK_FALSE(svc.job_status("job-000001"));
}

TEST_CASE("the HTTP adapter forwards requests with CORS headers") {
  Service svc({testing::TempDir().path, "http://example.test"});
  svc.publish(filter_snapshot());
  httplib::Server server;
  mount(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/v1/trajectories?limit=3");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://example.test");
  const auto body = Json::parse(res->body);
  CHECK(body.at("items").size() == 3);
  CHECK(body.at("total") == 30);

  auto bad = client.Get("/api/v1/trajectories?bbox=1,2");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(Json::parse(bad->body).at("error").at("code") == "bad_request");

  auto pre = client.Options("/api/v1/jobs");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  server.stop();
  th.join();
}

TEST_CASE("listen options come from the environment") {
  ::setenv("VKG_HOST", "0.0.0.0", 1);
  ::setenv("VKG_PORT", "9123", 1);
  auto o = listen_options_from_env();
  CHECK(o.host == "0.0.0.0");
  CHECK(o.port == 9123);
  ::setenv("VKG_PORT", "99999", 1);
  CHECK_THROWS_AS(listen_options_from_env(), std::invalid_argument);
  ::setenv("VKG_PORT", "80x", 1);
  CHECK_THROWS_AS(listen_options_from_env(), std::invalid_argument);
  ::unsetenv("VKG_HOST");
  ::unsetenv("VKG_PORT");
  CHECK(listen_options_from_env().port == 8080);
}
