#include "vkg/documents.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace vkg {

namespace {

// Rejects members outside `allowed`.
void expect_fields(const Json& j, std::initializer_list<std::string_view> allowed,
                   std::string_view what) {
  if (!j.is_object()) throw DocumentError(std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw DocumentError(std::string(what) + ": unknown field '" + key + "'");
  }
}

template <typename T>
T required(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DocumentError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw DocumentError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw DocumentError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

Timestamp required_time(const Json& j, const char* key) {
  const auto text = required<std::string>(j, key);
  const auto t = parse_timestamp(text);
  if (!t) throw DocumentError(std::string("field '") + key + "': bad timestamp '" + text + "'");
  return *t;
}

Provenance parse_provenance(const std::string& s) {
  if (s == "raw") return Provenance::raw;
  if (s == "imputed") return Provenance::imputed;
  throw DocumentError("unknown provenance '" + s + "'");
}

AttrClass required_attr_class(const Json& j, const char* key) {
  const auto s = required<std::string>(j, key);
  const auto c = parse_attr_class(s);
  if (!c) throw DocumentError("unknown attr_class '" + s + "'");
  return *c;
}

Json behavior_context_json(const BehaviorContext& c) {
  Json j = Json::object();
  put_optional(j, "prev", c.prev);
  put_optional(j, "current", c.current);
  put_optional(j, "next", c.next);
  return j;
}

}  // namespace

Json parse_document(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DocumentError(e.what());
  }
}

void to_json(Json& j, const Mmsi& m) { j = m.value; }
void from_json(const Json& j, Mmsi& m) {
  if (!j.is_number_unsigned()) throw DocumentError("mmsi must be an unsigned integer");
  m.value = j.get<std::uint32_t>();
}

void to_json(Json& j, const NodeId& id) { j = to_string(id); }
void from_json(const Json& j, NodeId& id) {
  if (!j.is_string()) throw DocumentError("node id must be a string");
  auto parsed = parse_node_id(j.get<std::string>());
  if (!parsed) throw DocumentError("malformed node id '" + j.get<std::string>() + "'");
  id = std::move(*parsed);
}

void to_json(Json& j, const AisRecord& r) {
  j = Json{{"mmsi", r.vessel_id},
           {"timestamp", format_timestamp(r.timestamp)},
           {"lat", r.lat},
           {"lon", r.lon},
           {"nav_status", r.nav_status},
           {"vessel_type", r.vessel_type}};
  put_optional(j, "sog", r.sog);
  put_optional(j, "cog", r.cog);
  put_optional(j, "heading", r.heading);
  put_optional(j, "length_m", r.length_m);
  put_optional(j, "width_m", r.width_m);
  put_optional(j, "draught_m", r.draught_m);
  put_optional(j, "cargo_type", r.cargo_type);
}

void from_json(const Json& j, AisRecord& r) {
  expect_fields(j, {"mmsi", "timestamp", "lat", "lon", "nav_status", "vessel_type", "sog", "cog",
                    "heading", "length_m", "width_m", "draught_m", "cargo_type"},
                "record");
  r.vessel_id = required<Mmsi>(j, "mmsi");
  r.timestamp = required_time(j, "timestamp");
  r.lat = required<double>(j, "lat");
  r.lon = required<double>(j, "lon");
  r.nav_status = required<std::string>(j, "nav_status");
  r.vessel_type = required<std::string>(j, "vessel_type");
  r.sog = optional_field<double>(j, "sog");
  r.cog = optional_field<double>(j, "cog");
  r.heading = optional_field<double>(j, "heading");
  r.length_m = optional_field<double>(j, "length_m");
  r.width_m = optional_field<double>(j, "width_m");
  r.draught_m = optional_field<double>(j, "draught_m");
  r.cargo_type = optional_field<std::string>(j, "cargo_type");
}

void to_json(Json& j, const Trajectory& t) { j = Json{{"mmsi", t.vessel_id}, {"records", t.records}}; }
void from_json(const Json& j, Trajectory& t) {
  expect_fields(j, {"mmsi", "records"}, "trajectory");
  t.vessel_id = required<Mmsi>(j, "mmsi");
  t.records = required<std::vector<AisRecord>>(j, "records");
}

void to_json(Json& j, const Segment& s) {
  j = Json{{"segment_id", s.segment_id},
           {"mmsi", s.vessel_id},
           {"provenance", to_string(s.provenance)},
           {"records", s.records}};
  put_optional(j, "behavior_id", s.behavior_id);
  put_optional(j, "method_key", s.method_key);
}

void from_json(const Json& j, Segment& s) {
  expect_fields(j, {"segment_id", "mmsi", "provenance", "records", "behavior_id", "method_key"},
                "segment");
  s.segment_id = required<std::string>(j, "segment_id");
  s.vessel_id = required<Mmsi>(j, "mmsi");
  s.provenance = parse_provenance(required<std::string>(j, "provenance"));
  s.records = required<std::vector<AisRecord>>(j, "records");
  s.behavior_id = optional_field<NodeId>(j, "behavior_id");
  s.method_key = optional_field<std::string>(j, "method_key");
}

void to_json(Json& j, const Gap& g) {
  j = Json{{"gap_id", g.gap_id}, {"mmsi", g.vessel_id}, {"before", g.before}, {"after", g.after}};
}
void from_json(const Json& j, Gap& g) {
  expect_fields(j, {"gap_id", "mmsi", "before", "after"}, "gap");
  g.gap_id = required<std::string>(j, "gap_id");
  g.vessel_id = required<Mmsi>(j, "mmsi");
  g.before = required<AisRecord>(j, "before");
  g.after = required<AisRecord>(j, "after");
}

void to_json(Json& j, const StaticAttr& a) {
  j = Json{{"attr_class", to_string(a.attr_class)}, {"display", a.display}};
}
void from_json(const Json& j, StaticAttr& a) {
  expect_fields(j, {"attr_class", "display"}, "static attribute");
  a.attr_class = required_attr_class(j, "attr_class");
  a.display = required<std::string>(j, "display");
}

void to_json(Json& j, const EvidenceEdge& e) {
  j = Json{{"relation", to_string(e.relation)},
           {"from", e.from},
           {"to", e.to},
           {"weight", e.weight},
           {"total", e.total},
           {"share", e.share()},
           {"share_pct", format_share(e.weight, e.total)}};
}
void from_json(const Json& j, EvidenceEdge& e) {
  expect_fields(j, {"relation", "from", "to", "weight", "total", "share", "share_pct"}, "evidence");
  const auto rel = required<std::string>(j, "relation");
  const auto parsed = parse_evidence_relation(rel);
  if (!parsed) throw DocumentError("unknown evidence relation '" + rel + "'");
  e.relation = *parsed;
  e.from = required<NodeId>(j, "from");
  e.to = required<NodeId>(j, "to");
  e.weight = required<std::uint64_t>(j, "weight");
  e.total = required<std::uint64_t>(j, "total");
}

void to_json(Json& j, const ImputedSegment& s) {
  j = Json{{"segment", s.segment},
           {"gap_id", s.gap_id},
           {"method_key", s.method_key},
           {"estimated_behavior", s.estimated_behavior},
           {"evidence", s.evidence},
           {"fallback_used", s.fallback_used},
           {"behavior_fallback", s.behavior_fallback},
           {"method_fallback", s.method_fallback},
           {"static_attrs", s.static_attrs}};
  put_optional(j, "prev_behavior", s.prev_behavior);
  put_optional(j, "next_behavior", s.next_behavior);
}

void from_json(const Json& j, ImputedSegment& s) {
  expect_fields(j, {"segment", "gap_id", "method_key", "estimated_behavior", "evidence",
                    "fallback_used", "behavior_fallback", "method_fallback", "static_attrs",
                    "prev_behavior", "next_behavior"},
                "imputed segment");
  s.segment = required<Segment>(j, "segment");
  s.gap_id = required<std::string>(j, "gap_id");
  s.method_key = required<std::string>(j, "method_key");
  s.estimated_behavior = required<NodeId>(j, "estimated_behavior");
  s.evidence = required<std::vector<EvidenceEdge>>(j, "evidence");
  s.fallback_used = required<bool>(j, "fallback_used");
  s.behavior_fallback = required<bool>(j, "behavior_fallback");
  s.method_fallback = required<bool>(j, "method_fallback");
  s.static_attrs = required<std::vector<StaticAttr>>(j, "static_attrs");
  s.prev_behavior = optional_field<NodeId>(j, "prev_behavior");
  s.next_behavior = optional_field<NodeId>(j, "next_behavior");
}

void to_json(Json& j, const Node& n) {
  j = Json{{"id", n.id},
           {"kind", to_string(n.id.kind)},
           {"display", n.display},
           {"description", n.description},
           {"count", n.count}};
  if (n.attr_class) j["attr_class"] = to_string(*n.attr_class);
}

void from_json(const Json& j, Node& n) {
  expect_fields(j, {"id", "kind", "display", "description", "count", "attr_class"}, "node");
  n.id = required<NodeId>(j, "id");
  n.display = required<std::string>(j, "display");
  n.description = required<std::string>(j, "description");
  n.count = required<std::uint64_t>(j, "count");
  n.attr_class.reset();
  if (j.contains("attr_class")) n.attr_class = required_attr_class(j, "attr_class");
}

void to_json(Json& j, const Edge& e) { j = Json{{"from", e.a}, {"to", e.b}, {"weight", e.weight}}; }
void from_json(const Json& j, Edge& e) {
  expect_fields(j, {"from", "to", "weight"}, "edge");
  e.a = required<NodeId>(j, "from");
  e.b = required<NodeId>(j, "to");
  e.weight = required<std::uint64_t>(j, "weight");
}

void to_json(Json& j, const SubgraphDoc& d) { j = Json{{"nodes", d.nodes}, {"edges", d.edges}}; }
void from_json(const Json& j, SubgraphDoc& d) {
  expect_fields(j, {"nodes", "edges"}, "subgraph");
  d.nodes = required<std::vector<Node>>(j, "nodes");
  d.edges = required<std::vector<Edge>>(j, "edges");
}

void to_json(Json& j, const SegmentReport& r) {
  Json attrs = Json::array();
  for (const auto& a : r.static_attributes)
    attrs.push_back({{"attr_class", to_string(a.attr_class)}, {"display", a.display}, {"node", a.node}});
  j = Json{{"segment_id", r.segment_id},
           {"mmsi", r.vessel_id},
           {"provenance", to_string(r.provenance)},
           {"static_attributes", attrs},
           {"behavior_context", behavior_context_json(r.behavior_context)},
           {"explanation",
            {{"cues", r.explanation.cues},
             {"rationale", r.explanation.rationale},
             {"evidence", r.explanation.evidence},
             {"text", r.explanation.text()}}},
           {"evidence", r.evidence},
           {"fallback_used", r.fallback_used},
           {"subgraph", r.subgraph},
           {"navigation", r.navigation}};
  put_optional(j, "method", r.method);
}

void from_json(const Json& j, SegmentReport& r) {
  expect_fields(j, {"segment_id", "mmsi", "provenance", "static_attributes", "behavior_context",
                    "explanation", "evidence", "fallback_used", "subgraph", "navigation", "method"},
                "segment report");
  r.segment_id = required<std::string>(j, "segment_id");
  r.vessel_id = required<Mmsi>(j, "mmsi");
  r.provenance = parse_provenance(required<std::string>(j, "provenance"));
  r.static_attributes.clear();
  for (const auto& a : required<Json>(j, "static_attributes")) {
    expect_fields(a, {"attr_class", "display", "node"}, "report attribute");
    r.static_attributes.push_back({required_attr_class(a, "attr_class"),
                                   required<std::string>(a, "display"), required<NodeId>(a, "node")});
  }
  const auto ctx = required<Json>(j, "behavior_context");
  expect_fields(ctx, {"prev", "current", "next"}, "behavior context");
  r.behavior_context = {optional_field<NodeId>(ctx, "prev"), optional_field<NodeId>(ctx, "current"),
                        optional_field<NodeId>(ctx, "next")};
  const auto ex = required<Json>(j, "explanation");
  expect_fields(ex, {"cues", "rationale", "evidence", "text"}, "explanation");
  r.explanation.cues = required<std::vector<std::string>>(ex, "cues");
  r.explanation.rationale = required<std::vector<std::string>>(ex, "rationale");
  r.explanation.evidence = required<std::vector<std::string>>(ex, "evidence");
  r.evidence = required<std::vector<EvidenceEdge>>(j, "evidence");
  r.fallback_used = required<bool>(j, "fallback_used");
  r.subgraph = required<SubgraphDoc>(j, "subgraph");
  r.navigation = required<std::vector<NodeId>>(j, "navigation");
  r.method = optional_field<NodeId>(j, "method");
}

void to_json(Json& j, const NodeReport& r) {
  Json neighbors = Json::array();
  for (const auto& n : r.neighbors)
    neighbors.push_back({{"id", n.id},
                         {"display", n.display},
                         {"weight", n.weight},
                         {"total", n.total},
                         {"share_pct", format_share(n.weight, n.total)}});
  auto succession = [](const std::vector<NodeSuccession>& v) {
    Json out = Json::array();
    for (const auto& s : v)
      out.push_back({{"id", s.id},
                     {"count", s.count},
                     {"total", s.total},
                     {"share_pct", format_share(s.count, s.total)}});
    return out;
  };
  j = Json{{"node", r.node},
           {"neighbors", neighbors},
           {"predecessors", succession(r.predecessors)},
           {"successors", succession(r.successors)},
           {"summary", r.summary},
           {"navigation", r.navigation}};
}

void to_json(Json& j, const JobConfig& c) {
  Json source{{"name", c.source.name},
              {"url_template", c.source.url_template},
              {"date_from", format_date(c.source.date_from)},
              {"date_to", format_date(c.source.date_to)},
              {"cache_dir", c.source.cache_dir.string()}};
  if (c.source.time_interval)
    source["time_interval"] = {{"start", format_time_of_day(c.source.time_interval->start_s)},
                               {"end", format_time_of_day(c.source.time_interval->end_s)}};
  j = Json{{"source", source},
           {"data_dir", c.data_dir.string()},
           {"gap_threshold_s", c.gap_threshold_s},
           {"max_segment_duration_s", c.max_segment_duration_s},
           {"v_max_kn", c.v_max_kn},
           {"worker_count", c.worker_count}};
  put_optional(j, "target_interval_s", c.target_interval_s);
  if (c.column_mapping_path) j["column_mapping_path"] = c.column_mapping_path->string();
  if (c.rules_path) j["rules_path"] = c.rules_path->string();
  if (c.ports_path) j["ports_path"] = c.ports_path->string();
}

void from_json(const Json& j, JobConfig& c) {
  expect_fields(j, {"source", "data_dir", "column_mapping_path", "gap_threshold_s",
                    "max_segment_duration_s", "target_interval_s", "v_max_kn", "rules_path",
                    "ports_path", "worker_count"},
                "job config");
  const auto source = required<Json>(j, "source");
  expect_fields(source, {"name", "url_template", "date_from", "date_to", "time_interval", "cache_dir"},
                "source");
  auto date = [&](const char* key) {
    const auto text = required<std::string>(source, key);
    const auto d = parse_date(text);
    if (!d) throw DocumentError(std::string(key) + ": bad date '" + text + "'");
    return *d;
  };
  c.source.name = optional_field<std::string>(source, "name").value_or("local");
  c.source.url_template = required<std::string>(source, "url_template");
  c.source.date_from = date("date_from");
  c.source.date_to = date("date_to");
  c.source.cache_dir = optional_field<std::string>(source, "cache_dir").value_or("cache");
  c.source.time_interval.reset();
  if (source.contains("time_interval")) {
    const auto w = required<Json>(source, "time_interval");
    expect_fields(w, {"start", "end"}, "time_interval");
    const auto start = parse_time_of_day(required<std::string>(w, "start"));
    const auto end = parse_time_of_day(required<std::string>(w, "end"));
    if (!start || !end) throw DocumentError("time_interval: expected HH:MM[:SS]");
    c.source.time_interval = TimeWindow{*start, *end};
  }
  const JobConfig defaults{};
  c.data_dir = optional_field<std::string>(j, "data_dir").value_or(defaults.data_dir.string());
  c.gap_threshold_s = optional_field<double>(j, "gap_threshold_s").value_or(defaults.gap_threshold_s);
  c.max_segment_duration_s =
      optional_field<double>(j, "max_segment_duration_s").value_or(defaults.max_segment_duration_s);
  c.target_interval_s = optional_field<double>(j, "target_interval_s");
  c.v_max_kn = optional_field<double>(j, "v_max_kn").value_or(defaults.v_max_kn);
  const auto workers = optional_field<std::int64_t>(j, "worker_count").value_or(1);
  if (workers < 1 || workers > 1024) throw DocumentError("worker_count must be in [1, 1024]");
  c.worker_count = static_cast<unsigned>(workers);
  auto path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (auto s = optional_field<std::string>(j, key)) return std::filesystem::path(*s);
    return std::nullopt;
  };
  c.column_mapping_path = path("column_mapping_path");
  c.rules_path = path("rules_path");
  c.ports_path = path("ports_path");
}

JobConfig job_config_from_json(const Json& j) {
  JobConfig c;
  try {
    from_json(j, c);
  } catch (const DocumentError& e) {
    throw InvalidJobConfig(e.what());
  }
  c.validate();
  return c;
}

JobConfig load_job_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidJobConfig("cannot read job config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = parse_document(buf.str());
  } catch (const DocumentError& e) {
    throw InvalidJobConfig(path.string() + ": " + e.what());
  }
  JobConfig c = job_config_from_json(j);
  const auto base = std::filesystem::absolute(path).parent_path();
  auto anchor = [&](std::filesystem::path& p) {
    if (p.is_relative()) p = base / p;
  };
  anchor(c.data_dir);
  if (c.column_mapping_path) anchor(*c.column_mapping_path);
  if (c.rules_path) anchor(*c.rules_path);
  if (c.ports_path) anchor(*c.ports_path);
  if (!is_remote_location(c.source.url_template)) {
    std::filesystem::path local(c.source.url_template);
    if (local.is_relative()) c.source.url_template = (base / local).string();
  }
  return c;
}

void to_json(Json& j, const JobStatus& s) {
  Json days = Json::array();
  for (const auto& d : s.days)
    days.push_back({{"date", format_date(d.date)}, {"ok", d.ok}, {"detail", d.detail}});
  const auto& c = s.counters;
  j = Json{{"job_id", s.job_id},
           {"phase", to_string(s.phase)},
           {"counters",
            {{"records_parsed", c.records_parsed},
             {"records_kept", c.records_kept},
             {"parse_failures", c.parse_failures},
             {"records_dropped", c.records_dropped},
             {"trajectories", c.trajectories},
             {"segments", c.segments},
             {"gaps", c.gaps},
             {"segments_observed", c.segments_observed},
             {"segments_benchmarked", c.segments_benchmarked},
             {"segments_speed_flagged", c.segments_speed_flagged},
             {"abstraction_failures", c.abstraction_failures},
             {"imputed_segments", c.imputed_segments},
             {"fallbacks", c.fallbacks}}},
           {"days", days},
           {"phase_seconds", s.phase_seconds},
           {"error", s.error}};
}

void from_json(const Json& j, JobStatus& s) {
  expect_fields(j, {"job_id", "phase", "counters", "days", "phase_seconds", "error"}, "job status");
  s.job_id = required<std::string>(j, "job_id");
  const auto phase = parse_job_phase(required<std::string>(j, "phase"));
  if (!phase) throw DocumentError("unknown job phase");
  s.phase = *phase;
  const auto c = required<Json>(j, "counters");
  auto& k = s.counters;
  k.records_parsed = required<std::uint64_t>(c, "records_parsed");
  k.records_kept = required<std::uint64_t>(c, "records_kept");
  k.parse_failures = required<std::map<std::string, std::uint64_t>>(c, "parse_failures");
  k.records_dropped = required<std::map<std::string, std::uint64_t>>(c, "records_dropped");
  k.trajectories = required<std::uint64_t>(c, "trajectories");
  k.segments = required<std::uint64_t>(c, "segments");
  k.gaps = required<std::uint64_t>(c, "gaps");
  k.segments_observed = required<std::uint64_t>(c, "segments_observed");
  k.segments_benchmarked = required<std::uint64_t>(c, "segments_benchmarked");
  k.segments_speed_flagged = required<std::uint64_t>(c, "segments_speed_flagged");
  k.abstraction_failures = required<std::uint64_t>(c, "abstraction_failures");
  k.imputed_segments = required<std::uint64_t>(c, "imputed_segments");
  k.fallbacks = required<std::uint64_t>(c, "fallbacks");
  s.days.clear();
  for (const auto& d : required<Json>(j, "days")) {
    const auto date = parse_date(required<std::string>(d, "date"));
    if (!date) throw DocumentError("bad day date");
    s.days.push_back({*date, required<bool>(d, "ok"), required<std::string>(d, "detail")});
  }
  s.phase_seconds = required<std::map<std::string, double>>(j, "phase_seconds");
  s.error = required<std::string>(j, "error");
}

void to_json(Json& j, const EvalReport& r) {
  auto rows = [](const std::vector<EvalRow>& v) {
    Json out = Json::array();
    for (const auto& row : v)
      out.push_back({{"label", row.label}, {"n", row.n}, {"mean_error_m", row.mean_error_m}});
    return out;
  };
  j = Json{{"segments", r.segments},
           {"fallbacks", r.fallbacks},
           {"per_method", rows(r.per_method)},
           {"per_selected_method", rows(r.per_selected_method)},
           {"per_behavior", rows(r.per_behavior)}};
}

}  // namespace vkg
