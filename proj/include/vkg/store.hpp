#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vkg/documents.hpp"
#include "vkg/workflow.hpp"

namespace vkg {

/// Everything the service serves, loaded fully into memory.
struct Snapshot {
  std::vector<Trajectory> trajectories;  // ascending MMSI
  std::vector<Segment> segments;         // raw
  std::vector<Gap> gaps;
  std::vector<ImputedSegment> imputed;
  KnowledgeGraph graph;
  std::map<std::string, SegmentReport> reports;
  std::vector<JobStatus> jobs;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

Snapshot make_snapshot(JobOutput output);

/// Referential problems: reports whose segment is unknown, and report node
/// references missing from the graph (fallback estimates excepted). Empty
/// when the snapshot is consistent.
std::vector<std::string> integrity_problems(const Snapshot& s);

/// One file per entity class under a data directory. Each .jsonl file opens
/// with a header line {"kind": ..., "schema_version": ...}.
namespace store_files {
inline constexpr const char* kTrajectories = "trajectories.jsonl";
inline constexpr const char* kSegments = "segments.jsonl";
inline constexpr const char* kGaps = "gaps.jsonl";
inline constexpr const char* kImputed = "imputed.jsonl";
inline constexpr const char* kReports = "reports.jsonl";
inline constexpr const char* kJobs = "jobs.jsonl";
inline constexpr const char* kGraph = "sdkg.json";
inline constexpr const char* kJobConfig = "job_config.json";
}  // namespace store_files

/// Writes `items` as a fresh entity file via a temporary file and rename.
template <typename T>
void save_entities(const std::filesystem::path& file, const std::string& kind,
                   const std::vector<T>& items);

/// Missing file: empty vector. Malformed lines or a kind mismatch throw DocumentError.
template <typename T>
std::vector<T> load_entities(const std::filesystem::path& file, const std::string& kind);

void save_trajectories(const std::filesystem::path& dir, const std::vector<Trajectory>& v);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& dir);
void save_segments(const std::filesystem::path& dir, const std::vector<Segment>& raw,
                   const std::vector<Gap>& gaps);
void save_imputed(const std::filesystem::path& dir, const std::vector<ImputedSegment>& v);
void save_reports(const std::filesystem::path& dir, const std::map<std::string, SegmentReport>& r);
void save_graph_file(const std::filesystem::path& file, const KnowledgeGraph& g);
/// Missing file: empty graph.
KnowledgeGraph load_graph_file(const std::filesystem::path& file);

/// Appends one status line to jobs.jsonl.
void append_job(const std::filesystem::path& dir, const JobStatus& status);

void save_job_config(const std::filesystem::path& dir, const JobConfig& cfg);
std::optional<JobConfig> load_saved_job_config(const std::filesystem::path& dir);

/// Writes every entity file (jobs.jsonl is rewritten from s.jobs).
void save_snapshot(const std::filesystem::path& dir, const Snapshot& s);
/// Missing files load as empty collections.
Snapshot load_snapshot(const std::filesystem::path& dir);

/// Atomic whole-file write (temporary file + rename).
void write_file_atomic(const std::filesystem::path& file, const std::string& content);
std::string read_file(const std::filesystem::path& file);

}  // namespace vkg
