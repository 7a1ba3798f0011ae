#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkg/behavior.hpp"
#include "vkg/data_source.hpp"
#include "vkg/explanation.hpp"
#include "vkg/imputation.hpp"
#include "vkg/sdkg.hpp"
#include "vkg/trajectory.hpp"

namespace vkg {

struct InvalidJobConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct JobConfig {
  SourceConfig source;
  std::filesystem::path data_dir = "vkg-data";
  std::optional<std::filesystem::path> column_mapping_path;
  double gap_threshold_s = 900.0;
  double max_segment_duration_s = 6.0 * 3600.0;
  /// Absent: median sampling interval of the trajectory (60 s when unknown).
  std::optional<double> target_interval_s;
  double v_max_kn = 60.0;
  std::optional<std::filesystem::path> rules_path;
  std::optional<std::filesystem::path> ports_path;
  unsigned worker_count = 1;

  /// Throws InvalidJobConfig.
  void validate() const;
  friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

enum class JobPhase { downloading, ingesting, building_kg, imputing, done, failed };
std::string_view to_string(JobPhase p);
std::optional<JobPhase> parse_job_phase(std::string_view s);

struct DayStatus {
  Date date;
  bool ok = false;
  std::string detail;  // cached path or failure reason
  friend bool operator==(const DayStatus&, const DayStatus&) = default;
};

struct JobCounters {
  std::uint64_t records_parsed = 0;
  std::uint64_t records_kept = 0;
  std::map<std::string, std::uint64_t> parse_failures;   // by ParseFailureReason
  std::map<std::string, std::uint64_t> records_dropped;  // duplicate, implied_speed, time_window
  std::uint64_t trajectories = 0;
  std::uint64_t segments = 0;
  std::uint64_t gaps = 0;
  std::uint64_t segments_observed = 0;
  std::uint64_t segments_benchmarked = 0;
  std::uint64_t segments_speed_flagged = 0;
  std::uint64_t abstraction_failures = 0;
  std::uint64_t imputed_segments = 0;
  std::uint64_t fallbacks = 0;
  friend bool operator==(const JobCounters&, const JobCounters&) = default;
};

struct JobStatus {
  std::string job_id;
  JobPhase phase = JobPhase::downloading;
  JobCounters counters;
  std::vector<DayStatus> days;
  std::map<std::string, double> phase_seconds;
  std::string error;
  friend bool operator==(const JobStatus&, const JobStatus&) = default;
};

struct JobFailed : std::runtime_error {
  JobFailed(JobPhase phase, const std::string& cause)
      : std::runtime_error(std::string(to_string(phase)) + ": " + cause), phase(phase) {}
  JobPhase phase;
};

/// Thread-safe holder of a job's live status. Phases only move forward;
/// `failed` is reachable from anywhere.
class JobTracker {
 public:
  explicit JobTracker(std::string job_id = "local");

  void enter(JobPhase phase);
  void update(const std::function<void(JobCounters&)>& fn);
  void add_day(DayStatus day);
  void fail(const std::string& error);
  JobStatus snapshot() const;

 private:
  void close_phase();

  mutable std::mutex mutex_;
  JobStatus status_;
  std::chrono::steady_clock::time_point phase_start_;
};

/// Resolved processing parameters (config files loaded).
struct PipelineSettings {
  double gap_threshold_s = 900.0;
  double max_segment_duration_s = 6.0 * 3600.0;
  std::optional<double> target_interval_s;
  double v_max_kn = 60.0;
  RuleConfig rules;
  PortDirectory ports;
  unsigned worker_count = 1;
};

PipelineSettings load_settings(const JobConfig& cfg);

/// One vessel after segmentation and behavior abstraction.
struct VesselAnalysis {
  Trajectory trajectory;
  std::vector<Segment> segments;  // raw, behavior_id set where abstraction succeeded
  std::vector<Gap> gaps;
  std::vector<std::vector<StaticAttr>> segment_attrs;
  std::vector<std::optional<SegmentFeatures>> features;
  std::vector<std::optional<BehaviorPattern>> behaviors;
  std::uint64_t speed_flagged = 0;
  std::uint64_t abstraction_failures = 0;
};

VesselAnalysis analyze_vessel(const Trajectory& traj, const PipelineSettings& s,
                              const BehaviorAbstractor& abstractor);

struct IngestResult {
  std::vector<Trajectory> trajectories;
};

/// Resolve, fetch, parse, window-filter and assemble. Per-day failures are
/// recorded, not fatal.
IngestResult ingest(const JobConfig& cfg, JobTracker& tracker);

/// Same, over already-parsed records (used by ingest and by tests).
IngestResult assemble_records(std::vector<AisRecord> records, const JobConfig& cfg,
                              JobTracker& tracker);

struct ConstructionResult {
  KnowledgeGraph graph;
  std::vector<VesselAnalysis> vessels;  // ascending MMSI
};

/// Segments, classifies, benchmarks and observes every eligible raw segment.
/// Work is split across `worker_count` threads with one partial graph each;
/// the merged graph does not depend on worker count or input order.
ConstructionResult build_knowledge(std::vector<Trajectory> trajectories, const PipelineSettings& s,
                                   const MethodRegistry& registry, JobTracker& tracker,
                                   const BehaviorAbstractor* abstractor = nullptr);

struct ConstructionOutput {
  KnowledgeGraph graph;
  std::vector<Trajectory> trajectories;
  std::vector<VesselAnalysis> vessels;
  JobStatus status;
};

ConstructionOutput run_construction(const JobConfig& cfg, const MethodRegistry& registry);

struct ImputationResult {
  std::vector<ImputedSegment> imputed;  // ascending MMSI, then time
  std::vector<VesselAnalysis> vessels;
};

/// One ImputedSegment per detected gap, imputed against an immutable graph.
ImputationResult run_imputation(const KnowledgeGraph& g, std::vector<Trajectory> trajectories,
                                const PipelineSettings& s, const MethodRegistry& registry,
                                JobTracker& tracker, const BehaviorAbstractor* abstractor = nullptr);

/// Gap context as seen from inside a vessel's analysis: attributes of the
/// gap endpoints, behaviors of the adjacent raw segments, context fixes.
GapContext gap_context(const VesselAnalysis& v, std::size_t gap_index, const PortDirectory& ports);

/// Reports for every raw and imputed segment, keyed by segment id.
std::map<std::string, SegmentReport> compose_reports(const KnowledgeGraph& g,
                                                     const std::vector<VesselAnalysis>& vessels,
                                                     const std::vector<ImputedSegment>& imputed);

/// Raw and imputed segments of one vessel interleaved by time.
std::vector<Segment> interleave(const VesselAnalysis& v, const std::vector<ImputedSegment>& imputed);

struct EvalRow {
  std::string label;
  std::uint64_t n = 0;
  double mean_error_m = 0.0;
  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
  std::uint64_t segments = 0;
  std::vector<EvalRow> per_method;           // every filler on every masked segment
  std::vector<EvalRow> per_selected_method;  // pipeline choice
  std::vector<EvalRow> per_behavior;         // pipeline choice, grouped by segment behavior
  std::uint64_t fallbacks = 0;
};

/// Everything one end-to-end job produces.
struct JobOutput {
  std::vector<Trajectory> trajectories;
  std::vector<VesselAnalysis> vessels;
  KnowledgeGraph graph;
  std::vector<ImputedSegment> imputed;
  std::map<std::string, SegmentReport> reports;
};

/// Download, ingest, build the graph, impute every gap, compose reports.
/// The tracker is left in the imputing phase: the caller enters done once the
/// output is persisted. Failures are recorded on the tracker and rethrown as
/// JobFailed.
JobOutput run_full_job(const JobConfig& cfg, const MethodRegistry& registry, JobTracker& tracker);

/// Masked-gap evaluation over eligible raw segments (>= 5 records), with the
/// same masking as benchmark().
EvalReport evaluate(const KnowledgeGraph& g, std::vector<Trajectory> trajectories,
                    const PipelineSettings& s, const MethodRegistry& registry);

}  // namespace vkg
