#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vkg/trajectory.hpp"

namespace vkg {

struct Port {
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  double radius_m = 0.0;
  friend bool operator==(const Port&, const Port&) = default;
};

/// Known ports with their approach radius. Spatial context in this project
/// is port proximity only.
class PortDirectory {
 public:
  PortDirectory() = default;
  explicit PortDirectory(std::vector<Port> ports);

  /// Delimited file: name,lat,lon,radius_m (header line and '#' comments allowed).
  static PortDirectory load(const std::filesystem::path& path);
  static PortDirectory parse(std::string_view text);

  struct Nearest {
    const Port* port;
    double distance_m;
    bool inside() const { return distance_m < port->radius_m; }
  };
  std::optional<Nearest> nearest(LatLon p) const;

  const std::vector<Port>& ports() const { return ports_; }
  bool empty() const { return ports_.empty(); }

 private:
  std::vector<Port> ports_;
};

struct PortProximity {
  std::string port;
  double distance_m = 0.0;
  double radius_m = 0.0;
  bool inside() const { return distance_m < radius_m; }
  friend bool operator==(const PortProximity&, const PortProximity&) = default;
};

/// Kinematic and contextual summary of one segment. Speed aggregates are
/// absent when no record carries a speed.
struct SegmentFeatures {
  std::optional<double> mean_sog;
  std::optional<double> start_sog;
  std::optional<double> end_sog;
  std::optional<double> sog_std;
  double total_course_change = 0.0;
  double net_displacement_m = 0.0;
  double path_length_m = 0.0;
  double straightness = 1.0;
  std::optional<PortProximity> start_port;
  std::optional<PortProximity> end_port;
  std::string modal_nav_status;
  std::string modal_vessel_type;
  double duration_s = 0.0;

  friend bool operator==(const SegmentFeatures&, const SegmentFeatures&) = default;
};

struct TooShort : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

SegmentFeatures extract_features(std::span<const AisRecord> records, const PortDirectory& ports);
inline SegmentFeatures extract_features(const Segment& seg, const PortDirectory& ports) {
  return extract_features(seg.records, ports);
}

/// Most frequent value; ties go to the lexicographically smallest.
std::string modal_value(std::span<const std::string> values);

struct BehaviorPattern {
  std::string name;
  std::string description;
  friend bool operator==(const BehaviorPattern&, const BehaviorPattern&) = default;
};

namespace patterns {
inline constexpr std::string_view kStationary = "Stationary: Hold Position";
inline constexpr std::string_view kPortEntry = "Port-Entry: Decelerate–Align";
inline constexpr std::string_view kPortExit = "Port-Exit: Accelerate–Depart";
inline constexpr std::string_view kTransit = "Transit: Steady Course";
inline constexpr std::string_view kManeuver = "Maneuver: Course Change";
inline constexpr std::string_view kDrift = "Drift: Slow Irregular";
}  // namespace patterns

/// The taxonomy, in rule-priority order.
const std::vector<BehaviorPattern>& behavior_taxonomy();
const BehaviorPattern& behavior_pattern(std::string_view name);

struct RuleConfig {
  double stationary_max_mean_sog_kn = 0.5;
  double port_speed_delta_kn = 3.0;
  double transit_min_straightness = 0.95;
  double transit_max_sog_std_kn = 1.5;
  double transit_min_mean_sog_kn = 4.0;
  double maneuver_min_course_change_deg = 45.0;

  /// key = value file; keys are the member names above.
  static RuleConfig load(const std::filesystem::path& path);
  static RuleConfig parse(std::string_view text);
  friend bool operator==(const RuleConfig&, const RuleConfig&) = default;
};

/// First matching rule wins: stationary, port entry, port exit, transit,
/// maneuver, drift.
const BehaviorPattern& classify(const SegmentFeatures& f, const RuleConfig& rules);

struct AbstractionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Turns a segment into a behavior pattern. The construction pipeline
/// depends only on this interface.
class BehaviorAbstractor {
 public:
  virtual ~BehaviorAbstractor() = default;
  virtual BehaviorPattern abstract(const Segment& seg, const PortDirectory& ports) const = 0;
  /// Implementations whose output can vary between calls must return false.
  virtual bool deterministic() const { return true; }
};

class RuleBasedAbstractor final : public BehaviorAbstractor {
 public:
  explicit RuleBasedAbstractor(RuleConfig rules = {}) : rules_(rules) {}
  BehaviorPattern abstract(const Segment& seg, const PortDirectory& ports) const override;
  const RuleConfig& rules() const { return rules_; }

 private:
  RuleConfig rules_;
};

}  // namespace vkg
