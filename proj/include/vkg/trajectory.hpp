#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vkg/ais_record.hpp"
#include "vkg/node_id.hpp"

namespace vkg {

struct Trajectory {
  Mmsi vessel_id;
  std::vector<AisRecord> records;  // strictly increasing timestamps

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class Provenance { raw, imputed };
std::string_view to_string(Provenance p);

struct Segment {
  std::string segment_id;
  Mmsi vessel_id;
  std::vector<AisRecord> records;
  Provenance provenance = Provenance::raw;
  std::optional<NodeId> behavior_id;
  std::optional<std::string> method_key;

  /// Segments with fewer than two records stay in the partition but are
  /// skipped by behavior abstraction.
  bool eligible() const { return records.size() >= 2; }
  double duration_s() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Gap {
  std::string gap_id;
  Mmsi vessel_id;
  AisRecord before;
  AisRecord after;

  double dt_s() const { return to_seconds(after.timestamp - before.timestamp); }
  friend bool operator==(const Gap&, const Gap&) = default;
};

enum class GuardVerdict { keep, drop_duplicate, drop_speed };
std::string_view to_string(GuardVerdict v);

/// Implied speed between two fixes in knots; +inf when dt is zero and the
/// positions differ.
double implied_speed_kn(const AisRecord& a, const AisRecord& b);

GuardVerdict guard_record(const AisRecord& r, const AisRecord* prev, double v_max_kn);

struct AssembleResult {
  std::vector<Trajectory> trajectories;  // ascending MMSI
  std::uint64_t kept = 0;
  std::uint64_t dropped_duplicate = 0;
  std::uint64_t dropped_speed = 0;
};

/// Groups by vessel, sorts by time (stable, so the first of equal-time
/// records wins), and applies guard_record against the last kept record.
AssembleResult assemble(std::vector<AisRecord> records, double v_max_kn);

struct SegmentationResult {
  std::vector<Segment> segments;
  std::vector<Gap> gaps;
};

std::string make_segment_id(Mmsi vessel, Timestamp first, Provenance p);

SegmentationResult segment_trajectory(const Trajectory& traj, double gap_threshold_s,
                                      double max_segment_duration_s);

/// Highest consecutive implied speed inside a segment, knots (0 for < 2 records).
double max_internal_speed_kn(std::span<const AisRecord> records);

/// Median consecutive sampling interval in seconds, or std::nullopt for < 2 records.
std::optional<double> median_sampling_interval_s(std::span<const AisRecord> records);

}  // namespace vkg
