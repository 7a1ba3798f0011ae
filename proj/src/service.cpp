#include "vkg/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <set>

namespace vkg {

struct Service::Serving {
  Snapshot data;
  std::map<std::uint32_t, std::size_t> trajectory_index;
  std::map<std::uint32_t, std::vector<const Segment*>> timeline;  // raw and imputed by time
  std::map<std::string, const ImputedSegment*> imputed_by_id;
};

namespace {

struct ApiError : std::runtime_error {
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

ApiError bad_request(const std::string& msg) { return {400, "bad_request", msg}; }
ApiError not_found(const std::string& msg) { return {404, "not_found", msg}; }

ApiResponse ok(Json body, int status = 200) {
  body["schema_version"] = kSchemaVersion;
  return {status, std::move(body)};
}

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, Json{{"schema_version", kSchemaVersion},
                       {"error", {{"code", code}, {"message", message}}}}};
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class Query {
 public:
  Query(const std::multimap<std::string, std::string>& q, std::initializer_list<std::string_view> allowed)
      : q_(q) {
    for (const auto& [key, _] : q) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw bad_request("unknown query parameter '" + key + "'");
      if (q.count(key) > 1) throw bad_request("query parameter '" + key + "' given twice");
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = q_.find(key);
    if (it == q_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint64_t> uint(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size() || v->empty())
      throw bad_request("'" + key + "' must be a non-negative integer");
    return out;
  }

  std::optional<Timestamp> time(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    auto t = parse_timestamp(*v);
    if (!t) throw bad_request("'" + key + "' is not a timestamp");
    return t;
  }

 private:
  const std::multimap<std::string, std::string>& q_;
};

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw bad_request(what + " must be a number");
  return v;
}

Mmsi parse_mmsi(const std::string& s) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || v == 0)
    throw bad_request("malformed mmsi '" + s + "'");
  return Mmsi{v};
}

TrajectoryFilter::Box parse_bbox(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 4) throw bad_request("bbox must be min_lon,min_lat,max_lon,max_lat");
  TrajectoryFilter::Box b{parse_double(parts[0], "bbox"), parse_double(parts[1], "bbox"),
                          parse_double(parts[2], "bbox"), parse_double(parts[3], "bbox")};
  if (b.min_lon > b.max_lon || b.min_lat > b.max_lat) throw bad_request("bbox is not well-ordered");
  if (b.min_lat < -90 || b.max_lat > 90 || b.min_lon < -180 || b.max_lon > 180)
    throw bad_request("bbox is out of range");
  return b;
}

TrajectorySummary summarize(const Trajectory& t) {
  TrajectorySummary s;
  s.vessel_id = t.vessel_id;
  s.record_count = t.records.size();
  if (t.records.empty()) return s;
  s.start = t.records.front().timestamp;
  s.end = t.records.back().timestamp;
  s.min_lon = s.max_lon = t.records.front().lon;
  s.min_lat = s.max_lat = t.records.front().lat;
  std::vector<std::string> types;
  for (const auto& r : t.records) {
    s.min_lon = std::min(s.min_lon, r.lon);
    s.max_lon = std::max(s.max_lon, r.lon);
    s.min_lat = std::min(s.min_lat, r.lat);
    s.max_lat = std::max(s.max_lat, r.lat);
    types.push_back(r.vessel_type);
  }
  s.vessel_type = modal_value(types);
  return s;
}

Json summary_json(const TrajectorySummary& s) {
  return Json{{"mmsi", s.vessel_id},
              {"start", format_timestamp(s.start)},
              {"end", format_timestamp(s.end)},
              {"record_count", s.record_count},
              {"bbox", {s.min_lon, s.min_lat, s.max_lon, s.max_lat}},
              {"vessel_type", s.vessel_type}};
}

std::optional<NodeId> node_param(const Query& q) {
  auto v = q.get("id");
  if (!v) throw bad_request("missing 'id'");
  auto id = parse_node_id(*v);
  if (!id) throw bad_request("malformed node id '" + *v + "'");
  return id;
}

}  // namespace

bool matches(const Trajectory& t, const TrajectoryFilter& f) {
  if (f.mmsi && t.vessel_id != *f.mmsi) return false;
  if (t.records.empty()) return !f.time_from && !f.time_to && !f.bbox;
  if (f.time_from && t.records.back().timestamp < *f.time_from) return false;
  if (f.time_to && t.records.front().timestamp > *f.time_to) return false;
  if (f.bbox) {
    const auto& b = *f.bbox;
    return std::any_of(t.records.begin(), t.records.end(), [&](const AisRecord& r) {
      return r.lon >= b.min_lon && r.lon <= b.max_lon && r.lat >= b.min_lat && r.lat <= b.max_lat;
    });
  }
  return true;
}

Service::Service(ServiceOptions opts, MethodRegistry registry)
    : opts_(std::move(opts)), registry_(std::move(registry)) {
  publish(Snapshot{});
}

Service::~Service() { wait_for_job(); }

void Service::load() {
  auto s = load_snapshot(opts_.data_dir);
  {
    std::lock_guard lock(job_mutex_);
    for (const auto& j : s.jobs) finished_jobs_[j.job_id] = j;
    job_seq_ = s.jobs.size();
  }
  publish(std::move(s));
}

void Service::publish(Snapshot s) {
  auto serving = std::make_shared<Serving>();
  serving->data = std::move(s);
  auto& d = serving->data;
  for (std::size_t i = 0; i < d.trajectories.size(); ++i)
    serving->trajectory_index[d.trajectories[i].vessel_id.value] = i;
  for (const auto& seg : d.segments) serving->timeline[seg.vessel_id.value].push_back(&seg);
  for (const auto& imp : d.imputed) {
    serving->timeline[imp.segment.vessel_id.value].push_back(&imp.segment);
    serving->imputed_by_id[imp.segment.segment_id] = &imp;
  }
  for (auto& [_, list] : serving->timeline)
    std::stable_sort(list.begin(), list.end(), [](const Segment* a, const Segment* b) {
      const auto ta = a->records.front().timestamp;
      const auto tb = b->records.front().timestamp;
      if (ta != tb) return ta < tb;
      return a->provenance < b->provenance;
    });
  std::lock_guard lock(snapshot_mutex_);
  serving_ = std::move(serving);
}

std::shared_ptr<const Snapshot> Service::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return std::shared_ptr<const Snapshot>(serving_, &serving_->data);
}

ApiResponse Service::handle(const ApiRequest& req) {
  try {
    return dispatch(req);
  } catch (const ApiError& e) {
    return error_response(e.status, e.code, e.what());
  } catch (const InvalidJobConfig& e) {
    return error_response(400, "invalid_job_config", e.what());
  } catch (const DocumentError& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const UnknownNode& e) {
    return error_response(404, "not_found", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

ApiResponse Service::dispatch(const ApiRequest& req) {
  if (req.path.rfind(kApiPrefix, 0) != 0) throw not_found("no such endpoint");
  std::string rest = req.path.substr(kApiPrefix.size());
  while (rest.size() > 1 && rest.back() == '/') rest.pop_back();
  auto parts = split(rest, '/');
  if (!parts.empty() && parts.front().empty()) parts.erase(parts.begin());

  std::shared_ptr<const Serving> serving;
  {
    std::lock_guard lock(snapshot_mutex_);
    serving = serving_;
  }
  const Snapshot& snap = serving->data;
  const bool get = req.method == "GET";
  auto require_get = [&] {
    if (!get) throw ApiError(405, "method_not_allowed", req.method + " not allowed here");
  };

  if (parts.size() == 1 && parts[0] == "health") {
    require_get();
    Query q(req.query, {});
    return ok({{"status", "ok"}});
  }

  if (!parts.empty() && parts[0] == "trajectories") {
    require_get();
    if (parts.size() == 1) {
      Query q(req.query, {"mmsi", "time_from", "time_to", "bbox", "offset", "limit"});
      TrajectoryFilter f;
      if (auto v = q.get("mmsi")) f.mmsi = parse_mmsi(*v);
      f.time_from = q.time("time_from");
      f.time_to = q.time("time_to");
      if (f.time_from && f.time_to && *f.time_from > *f.time_to)
        throw bad_request("time_from is after time_to");
      if (auto v = q.get("bbox")) f.bbox = parse_bbox(*v);
      const auto offset = q.uint("offset").value_or(0);
      const auto limit = q.uint("limit").value_or(100);
      if (limit == 0 || limit > 1000) throw bad_request("limit must be in [1, 1000]");
      Json items = Json::array();
      std::uint64_t total = 0;
      for (const auto& t : snap.trajectories) {
        if (!matches(t, f)) continue;
        if (total >= offset && total < offset + limit) items.push_back(summary_json(summarize(t)));
        ++total;
      }
      return ok({{"total", total}, {"offset", offset}, {"limit", limit}, {"items", items}});
    }
    if (parts.size() == 3 && parts[2] == "segments") {
      Query q(req.query, {});
      const Mmsi mmsi = parse_mmsi(parts[1]);
      if (!serving->trajectory_index.contains(mmsi.value))
        throw not_found("unknown mmsi " + parts[1]);
      Json items = Json::array();
      if (auto it = serving->timeline.find(mmsi.value); it != serving->timeline.end()) {
        for (const Segment* seg : it->second) {
          Json j = *seg;
          if (auto imp = serving->imputed_by_id.find(seg->segment_id); imp != serving->imputed_by_id.end()) {
            j["gap_id"] = imp->second->gap_id;
            j["fallback_used"] = imp->second->fallback_used;
          }
          items.push_back(std::move(j));
        }
      }
      return ok({{"mmsi", mmsi}, {"segments", items}});
    }
  }

  if (parts.size() == 3 && parts[0] == "segments") {
    require_get();
    Query q(req.query, {});
    auto it = snap.reports.find(parts[1]);
    if (it == snap.reports.end()) throw not_found("unknown segment " + parts[1]);
    if (parts[2] == "report") return ok({{"report", it->second}});
    if (parts[2] == "subgraph") return ok({{"segment_id", parts[1]}, {"subgraph", it->second.subgraph}});
  }

  if (parts.size() == 2 && parts[0] == "kg") {
    require_get();
    if (parts[1] == "nodes") {
      Query q(req.query, {"kind", "q", "offset", "limit"});
      std::optional<NodeKind> kind;
      if (auto v = q.get("kind")) {
        kind = parse_node_kind(*v);
        if (!kind) throw bad_request("unknown node kind '" + *v + "'");
      }
      const std::string needle = canonical_key(q.get("q").value_or(""));
      const auto offset = q.uint("offset").value_or(0);
      const auto limit = q.uint("limit").value_or(1000);
      if (limit == 0 || limit > 10000) throw bad_request("limit must be in [1, 10000]");
      Json items = Json::array();
      std::uint64_t total = 0;
      for (const auto& [id, node] : snap.graph.nodes()) {
        if (kind && id.kind != *kind) continue;
        if (!needle.empty() && id.key.find(needle) == std::string::npos) continue;
        if (total >= offset && total < offset + limit) items.push_back(node);
        ++total;
      }
      return ok({{"total", total}, {"offset", offset}, {"limit", limit}, {"items", items}});
    }
    if (parts[1] == "node") {
      Query q(req.query, {"id"});
      const auto id = node_param(q);
      if (!snap.graph.contains(*id)) throw not_found("unknown node " + to_string(*id));
      return ok({{"report", report_for_node(*id, snap.graph)}});
    }
    if (parts[1] == "neighbors") {
      Query q(req.query, {"id"});
      const auto id = node_param(q);
      if (!snap.graph.contains(*id)) throw not_found("unknown node " + to_string(*id));
      Json items = Json::array();
      for (const auto& n : neighbors(snap.graph, *id))
        items.push_back({{"id", n.id}, {"display", snap.graph.at(n.id).display}, {"weight", n.weight}});
      return ok({{"id", *id}, {"neighbors", items}});
    }
  }

  if (!parts.empty() && parts[0] == "jobs") {
    if (parts.size() == 1) {
      if (req.method != "POST") throw ApiError(405, "method_not_allowed", "use POST to submit a job");
      Query q(req.query, {});
      const auto cfg = job_config_from_json(parse_document(req.body));
      auto id = submit_job(cfg);
      if (!id) throw ApiError(409, "conflict", "another job is running");
      return ok({{"job_id", *id}}, 202);
    }
    if (parts.size() == 2) {
      require_get();
      Query q(req.query, {});
      auto status = job_status(parts[1]);
      if (!status) throw not_found("unknown job " + parts[1]);
      return ok({{"job", *status}});
    }
  }

  throw not_found("no such endpoint " + req.path);
}

std::optional<std::string> Service::submit_job(JobConfig cfg) {
  cfg.validate();
  std::lock_guard lock(job_mutex_);
  if (job_running_) return std::nullopt;
  if (worker_.joinable()) worker_.join();
  char buf[32];
  std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(++job_seq_));
  std::string id = buf;
  auto tracker = std::make_shared<JobTracker>(id);
  live_jobs_[id] = tracker;
  job_running_ = true;
  worker_ = std::thread(&Service::run_job, this, id, std::move(cfg), tracker);
  return id;
}

void Service::run_job(std::string id, JobConfig cfg, std::shared_ptr<JobTracker> tracker) {
  cfg.data_dir = opts_.data_dir;
  try {
    auto output = run_full_job(cfg, registry_, *tracker);
    Snapshot next = make_snapshot(std::move(output));
    {
      std::lock_guard lock(job_mutex_);
      for (const auto& [_, s] : finished_jobs_) next.jobs.push_back(s);
    }
    tracker->enter(JobPhase::done);
    next.jobs.push_back(tracker->snapshot());
    save_snapshot(opts_.data_dir, next);
    save_job_config(opts_.data_dir, cfg);
    publish(std::move(next));
  } catch (const std::exception& e) {
    tracker->fail(e.what());
    try {
      append_job(opts_.data_dir, tracker->snapshot());
    } catch (const std::exception&) {
      // The status stays queryable in memory.
    }
  }
  std::lock_guard lock(job_mutex_);
  finished_jobs_[id] = tracker->snapshot();
  live_jobs_.erase(id);
  job_running_ = false;
}

std::optional<JobStatus> Service::job_status(const std::string& id) const {
  std::lock_guard lock(job_mutex_);
  if (auto it = live_jobs_.find(id); it != live_jobs_.end()) {
    auto s = it->second->snapshot();
    // Done only becomes visible once the new snapshot is being served.
    if (s.phase == JobPhase::done) s.phase = JobPhase::imputing;
    return s;
  }
  if (auto it = finished_jobs_.find(id); it != finished_jobs_.end()) return it->second;
  return std::nullopt;
}

void Service::wait_for_job() {
  std::thread t;
  {
    std::lock_guard lock(job_mutex_);
    t = std::move(worker_);
  }
  if (t.joinable()) t.join();
}

void mount(httplib::Server& server, Service& service) {
  const std::string origin = service.options().cors_origin;
  server.set_pre_routing_handler([&service, origin](const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind(kApiPrefix, 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    ApiRequest api{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) api.query.emplace(k, v);
    const auto out = service.handle(api);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });
}

ListenOptions listen_options_from_env(ListenOptions defaults) {
  if (const char* host = std::getenv("VKG_HOST"); host && *host) defaults.host = host;
  if (const char* port = std::getenv("VKG_PORT"); port && *port) {
    int p = 0;
    auto [ptr, ec] = std::from_chars(port, port + std::strlen(port), p);
    if (ec != std::errc() || *ptr != '\0' || p <= 0 || p > 65535)
      throw std::invalid_argument(std::string("VKG_PORT is not a port: ") + port);
    defaults.port = p;
  }
  return defaults;
}

}  // namespace vkg
