#include "vkg/store.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace vkg {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, file);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::string header_line(const std::string& kind) {
  return Json{{"kind", kind}, {"schema_version", kSchemaVersion}}.dump() + "\n";
}

void check_header(const Json& h, const std::string& kind, const fs::path& file) {
  if (!h.is_object() || h.value("kind", "") != kind)
    throw DocumentError(file.string() + ": expected a '" + kind + "' file");
  if (h.value("schema_version", 0) != kSchemaVersion)
    throw DocumentError(file.string() + ": unsupported schema_version");
}

}  // namespace

template <typename T>
void save_entities(const fs::path& file, const std::string& kind, const std::vector<T>& items) {
  std::string out = header_line(kind);
  for (const auto& item : items) {
    out += Json(item).dump();
    out += '\n';
  }
  write_file_atomic(file, out);
}

template <typename T>
std::vector<T> load_entities(const fs::path& file, const std::string& kind) {
  std::vector<T> out;
  if (!fs::exists(file)) return out;
  std::ifstream in(file);
  if (!in) throw DocumentError("cannot read " + file.string());
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Json j = parse_document(line);
      if (!header) {
        check_header(j, kind, file);
        header = true;
        continue;
      }
      out.push_back(j.get<T>());
    } catch (const DocumentError& e) {
      throw DocumentError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw DocumentError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template void save_entities(const fs::path&, const std::string&, const std::vector<Trajectory>&);
template std::vector<Trajectory> load_entities(const fs::path&, const std::string&);

namespace {

// Reports and job statuses carry their own readers; wrap them for the templates.
struct ReportLine {
  SegmentReport report;
};
void to_json(Json& j, const ReportLine& r) { j = r.report; }
void from_json(const Json& j, ReportLine& r) { from_json(j, r.report); }

struct JobLine {
  JobStatus status;
};
void to_json(Json& j, const JobLine& r) { j = r.status; }
void from_json(const Json& j, JobLine& r) { from_json(j, r.status); }

}  // namespace

void save_trajectories(const fs::path& dir, const std::vector<Trajectory>& v) {
  save_entities(dir / store_files::kTrajectories, "trajectories", v);
}

std::vector<Trajectory> load_trajectories(const fs::path& dir) {
  return load_entities<Trajectory>(dir / store_files::kTrajectories, "trajectories");
}

void save_segments(const fs::path& dir, const std::vector<Segment>& raw, const std::vector<Gap>& gaps) {
  save_entities(dir / store_files::kSegments, "segments", raw);
  save_entities(dir / store_files::kGaps, "gaps", gaps);
}

void save_imputed(const fs::path& dir, const std::vector<ImputedSegment>& v) {
  save_entities(dir / store_files::kImputed, "imputed", v);
}

void save_reports(const fs::path& dir, const std::map<std::string, SegmentReport>& r) {
  std::vector<ReportLine> lines;
  for (const auto& [_, report] : r) lines.push_back({report});
  save_entities(dir / store_files::kReports, "reports", lines);
}

void save_graph_file(const fs::path& file, const KnowledgeGraph& g) {
  write_file_atomic(file, save_graph(g));
}

KnowledgeGraph load_graph_file(const fs::path& file) {
  if (!fs::exists(file)) return {};
  return load_graph(read_file(file));
}

void append_job(const fs::path& dir, const JobStatus& status) {
  const fs::path file = dir / store_files::kJobs;
  fs::create_directories(dir);
  const bool fresh = !fs::exists(file) || fs::file_size(file) == 0;
  std::ofstream out(file, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + file.string());
  if (fresh) out << header_line("jobs");
  out << Json(status).dump() << '\n';
}

void save_job_config(const fs::path& dir, const JobConfig& cfg) {
  // Saved paths are absolute so the file can be read from any directory.
  JobConfig abs = cfg;
  auto absolute = [](fs::path& p) { p = fs::absolute(p).lexically_normal(); };
  absolute(abs.data_dir);
  if (abs.column_mapping_path) absolute(*abs.column_mapping_path);
  if (abs.rules_path) absolute(*abs.rules_path);
  if (abs.ports_path) absolute(*abs.ports_path);
  if (!abs.source.cache_dir.is_relative()) absolute(abs.source.cache_dir);
  if (!is_remote_location(abs.source.url_template)) {
    fs::path local(abs.source.url_template);
    abs.source.url_template = fs::absolute(local).lexically_normal().string();
  }
  Json j = abs;
  write_file_atomic(dir / store_files::kJobConfig, j.dump(2) + "\n");
}

std::optional<JobConfig> load_saved_job_config(const fs::path& dir) {
  const fs::path file = dir / store_files::kJobConfig;
  if (!fs::exists(file)) return std::nullopt;
  return load_job_config(file);
}

Snapshot make_snapshot(JobOutput output) {
  Snapshot s;
  s.trajectories = std::move(output.trajectories);
  for (auto& v : output.vessels) {
    for (auto& seg : v.segments) s.segments.push_back(std::move(seg));
    for (auto& gap : v.gaps) s.gaps.push_back(std::move(gap));
  }
  s.imputed = std::move(output.imputed);
  s.graph = std::move(output.graph);
  s.reports = std::move(output.reports);
  return s;
}

std::vector<std::string> integrity_problems(const Snapshot& s) {
  std::vector<std::string> problems;
  std::set<std::string> segment_ids;
  for (const auto& seg : s.segments) segment_ids.insert(seg.segment_id);
  std::map<std::string, const ImputedSegment*> imputed;
  for (const auto& imp : s.imputed) {
    segment_ids.insert(imp.segment.segment_id);
    imputed[imp.segment.segment_id] = &imp;
  }
  for (const auto& [id, r] : s.reports) {
    if (!segment_ids.contains(id)) problems.push_back("report for unknown segment " + id);
    std::set<NodeId> exempt;
    if (auto it = imputed.find(id); it != imputed.end()) {
      if (it->second->behavior_fallback) exempt.insert(it->second->estimated_behavior);
      if (it->second->fallback_used) exempt.insert(method_node_id(it->second->method_key));
    }
    auto check = [&](const std::optional<NodeId>& n) {
      if (n && !exempt.contains(*n) && !s.graph.contains(*n))
        problems.push_back("report " + id + " references missing node " + to_string(*n));
    };
    for (const auto& a : r.static_attributes) check(a.node);
    check(r.behavior_context.prev);
    check(r.behavior_context.current);
    check(r.behavior_context.next);
    check(r.method);
    for (const auto& n : r.navigation) check(n);
  }
  return problems;
}

void save_snapshot(const fs::path& dir, const Snapshot& s) {
  save_trajectories(dir, s.trajectories);
  save_segments(dir, s.segments, s.gaps);
  save_imputed(dir, s.imputed);
  save_reports(dir, s.reports);
  save_graph_file(dir / store_files::kGraph, s.graph);
  std::vector<JobLine> jobs;
  for (const auto& j : s.jobs) jobs.push_back({j});
  save_entities(dir / store_files::kJobs, "jobs", jobs);
}

Snapshot load_snapshot(const fs::path& dir) {
  Snapshot s;
  s.trajectories = load_trajectories(dir);
  s.segments = load_entities<Segment>(dir / store_files::kSegments, "segments");
  s.gaps = load_entities<Gap>(dir / store_files::kGaps, "gaps");
  s.imputed = load_entities<ImputedSegment>(dir / store_files::kImputed, "imputed");
  for (auto& line : load_entities<ReportLine>(dir / store_files::kReports, "reports"))
    s.reports[line.report.segment_id] = std::move(line.report);
  s.graph = load_graph_file(dir / store_files::kGraph);
  for (auto& line : load_entities<JobLine>(dir / store_files::kJobs, "jobs"))
    s.jobs.push_back(std::move(line.status));
  return s;
}

template void save_entities(const fs::path&, const std::string&, const std::vector<Segment>&);
template std::vector<Segment> load_entities(const fs::path&, const std::string&);
template void save_entities(const fs::path&, const std::string&, const std::vector<Gap>&);
template std::vector<Gap> load_entities(const fs::path&, const std::string&);
template void save_entities(const fs::path&, const std::string&, const std::vector<ImputedSegment>&);
template std::vector<ImputedSegment> load_entities(const fs::path&, const std::string&);

}  // namespace vkg
