#include <doctest.h>

#include <fstream>

#include "synthetic.hpp"
#include "vkg/documents.hpp"
#include "vkg/store.hpp"

using namespace vkg;
using testing::TempDir;

namespace {

template <typename T>
T round_trip(const T& v) {
  return Json::parse(Json(v).dump()).template get<T>();
}

JobOutput sample_output(const std::filesystem::path& dir) {
  JobTracker t;
  return run_full_job(testing::sample_job_config(dir), default_registry(), t);
}

}  // namespace

TEST_CASE("entity documents round-trip") {
  auto r = testing::make_record(219000001, 12.5, 57.123456, 10.654321, 11.2, 359.9);
  r.heading = 12;
  r.cargo_type = "Hazard A";
  r.draught_m = 7.25;
  CHECK(round_trip(r) == r);
  const auto bare = testing::make_record(1, 0, -89.5, 179.9);
  CHECK(round_trip(bare) == bare);
  CHECK(!Json(bare).contains("sog"));

  const Trajectory traj{Mmsi{1}, testing::straight_track(1, 5, 60, 10, 90)};
  CHECK(round_trip(traj) == traj);

  const auto g = testing::port_approach_graph();
  GapContext ctx;
  ctx.gap = testing::make_gap(traj.records[0], traj.records[4], "1-g");
  ctx.static_attrs = {{AttrClass::vessel_type, "Cargo"},
                      {AttrClass::nav_status, "Under way using engine"},
                      {AttrClass::spatial_context, "near-port:Aalborg"}};
  ctx.prev_behavior = behavior_node_id(patterns::kTransit);
  const auto imp = impute_gap(g, default_registry(), ctx, 30);
  CHECK(round_trip(imp) == imp);
  CHECK(round_trip(imp.segment) == imp.segment);
  CHECK(round_trip(ctx.gap) == ctx.gap);
  const auto report = compose(imp, g);
  CHECK(round_trip(report) == report);
  const auto doc = subgraph_for_segment(g, ctx.static_attrs, behavior_node_id(patterns::kPortEntry), std::nullopt);
  CHECK(round_trip(doc) == doc);
  CHECK(round_trip(behavior_node_id(patterns::kPortEntry)) == behavior_node_id(patterns::kPortEntry));
  CHECK(Json(behavior_node_id(patterns::kDrift)).get<std::string>() == "behavior/drift: slow irregular");
  for (const auto& e : imp.evidence) CHECK(round_trip(e) == e);
}

TEST_CASE("job documents round-trip") {
  auto cfg = testing::sample_job_config("/tmp/x");
  cfg.target_interval_s = 30;
  cfg.source.time_interval = TimeWindow{3600, 7200};
  CHECK(round_trip(cfg) == cfg);

  JobStatus s;
  s.job_id = "job-000001";
  s.phase = JobPhase::imputing;
  s.counters.records_parsed = 10;
  s.counters.parse_failures["bad_timestamp"] = 2;
  s.counters.records_dropped["duplicate"] = 1;
  s.days.push_back({Date{std::chrono::year{2024}, std::chrono::month{3}, std::chrono::day{1}}, true, "x.csv"});
  s.phase_seconds["downloading"] = 0.125;
  s.error = "";
  CHECK(round_trip(s) == s);
}

TEST_CASE("strict readers reject unknown fields") {
  auto j = Json(testing::make_record(1, 0, 57, 10));
  j["speed"] = 3;
  CHECK_THROWS_AS(j.get<AisRecord>(), DocumentError);

  Json cfg = testing::sample_job_config("/tmp/x");
  CHECK_NOTHROW(job_config_from_json(cfg));
  auto extra = cfg;
  extra["turbo"] = true;
  CHECK_THROWS_AS(job_config_from_json(extra), InvalidJobConfig);
  auto nested = cfg;
  nested["source"]["password"] = "x";
  CHECK_THROWS_AS(job_config_from_json(nested), InvalidJobConfig);
  auto dates = cfg;
  dates["source"]["date_from"] = "2024-13-01";
  CHECK_THROWS_AS(job_config_from_json(dates), InvalidJobConfig);
  auto order = cfg;
  order["source"]["date_from"] = "2024-03-05";
  CHECK_THROWS_AS(job_config_from_json(order), InvalidJobConfig);
  auto workers = cfg;
  workers["worker_count"] = 0;
  CHECK_THROWS_AS(job_config_from_json(workers), InvalidJobConfig);
  CHECK_THROWS_AS(parse_document("{\"a\":"), DocumentError);
}

TEST_CASE("job config files anchor relative paths at their directory") {
  TempDir tmp;
  const auto dir = tmp.path / "cfg";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "job.json") << R"({"source":{"url_template":"days/{date}.csv","date_from":"2024-03-01",
    "date_to":"2024-03-01","cache_dir":"cache"},"data_dir":"out","rules_path":"../rules.conf"})";
  const auto cfg = load_job_config(dir / "job.json");
  CHECK(cfg.data_dir == dir / "out");
  CHECK(cfg.rules_path == dir / "../rules.conf");
  CHECK(cfg.source.url_template == (dir / "days/{date}.csv").string());
  CHECK(cfg.source.cache_dir == "cache");
  CHECK(cfg.worker_count == 1);
  CHECK_THROWS_AS(load_job_config(dir / "nope.json"), InvalidJobConfig);

  save_job_config(tmp.path / "data", cfg);
  const auto saved = load_saved_job_config(tmp.path / "data");
  REQUIRE(saved);
  CHECK(saved->data_dir == (dir / "out").lexically_normal());
  CHECK(!load_saved_job_config(tmp.path / "elsewhere"));
}

TEST_CASE("snapshots persist and reload unchanged") {
  TempDir tmp;
  auto snap = make_snapshot(sample_output(tmp.path / "data"));
  JobStatus st;
  st.job_id = "local";
  st.phase = JobPhase::done;
  snap.jobs.push_back(st);
  CHECK(integrity_problems(snap).empty());
  save_snapshot(tmp.path / "store", snap);
  const auto back = load_snapshot(tmp.path / "store");
  CHECK(back.trajectories == snap.trajectories);
  CHECK(back.segments == snap.segments);
  CHECK(back.gaps == snap.gaps);
  CHECK(back.imputed == snap.imputed);
  CHECK(back.graph == snap.graph);
  CHECK(back.reports == snap.reports);
  CHECK(back.jobs == snap.jobs);
  CHECK(back == snap);

  append_job(tmp.path / "store", st);
  CHECK(load_snapshot(tmp.path / "store").jobs.size() == 2);

  // A second save of the reloaded snapshot is byte-identical.
  save_snapshot(tmp.path / "again", back);
  for (const char* f : {store_files::kTrajectories, store_files::kSegments, store_files::kImputed,
                        store_files::kReports, store_files::kGraph})
    CHECK(read_file(tmp.path / "store" / f) == read_file(tmp.path / "again" / f));
}

TEST_CASE("missing and malformed store files") {
  TempDir tmp;
  CHECK(load_snapshot(tmp.path) == Snapshot{});
  CHECK(load_graph_file(tmp.path / "none.json").empty());
  write_file_atomic(tmp.path / store_files::kTrajectories, "{\"kind\":\"segments\",\"schema_version\":1}\n");
  CHECK_THROWS_AS(load_trajectories(tmp.path), DocumentError);
  write_file_atomic(tmp.path / store_files::kTrajectories,
                    "{\"kind\":\"trajectories\",\"schema_version\":1}\n{\"vessel_id\":1,\"rec");
  CHECK_THROWS_AS(load_trajectories(tmp.path), DocumentError);
  write_file_atomic(tmp.path / store_files::kTrajectories, "{\"kind\":\"trajectories\",\"schema_version\":9}\n");
  CHECK_THROWS_AS(load_trajectories(tmp.path), DocumentError);
  CHECK(!std::filesystem::exists(tmp.path / (std::string(store_files::kTrajectories) + ".tmp")));
}

TEST_CASE("integrity check finds dangling references") {
  TempDir tmp;
  auto snap = make_snapshot(sample_output(tmp.path));
  REQUIRE(!snap.reports.empty());
  auto broken = snap;
  broken.graph = KnowledgeGraph{};
  CHECK(!integrity_problems(broken).empty());
  auto orphan = snap;
  auto r = orphan.reports.begin()->second;
  r.segment_id = "ghost";
  orphan.reports["ghost"] = r;
  CHECK(!integrity_problems(orphan).empty());
}
