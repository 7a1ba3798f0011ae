#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vkg/sdkg.hpp"
#include "vkg/trajectory.hpp"

namespace vkg {

/// Everything a filler may look at: the gap, the timestamps to produce, and
/// optionally one extra fix on each side (the record before gap.before and
/// the record after gap.after).
struct FillRequest {
  Gap gap;
  std::vector<Timestamp> times;
  std::optional<AisRecord> before_context;
  std::optional<AisRecord> after_context;
};

/// Produces one record per requested time, never the boundary records.
using Filler = std::function<std::vector<AisRecord>(const FillRequest&)>;

struct MethodEntry {
  std::string key;
  std::string display;
  std::string description;
  Filler fill;
};

struct UnknownMethod : std::out_of_range {
  using std::out_of_range::out_of_range;
};

namespace methods {
inline constexpr std::string_view kLinear = "linear";
inline constexpr std::string_view kSmoothCurve = "smooth_curve";
inline constexpr std::string_view kStationary = "stationary";
}  // namespace methods

class MethodRegistry {
 public:
  /// Keys are canonicalized; registering an existing key throws.
  void add(MethodEntry entry);
  const MethodEntry* find(std::string_view key) const;
  const MethodEntry& at(std::string_view key) const;  // throws UnknownMethod
  MethodRef ref(std::string_view key) const;
  /// Ascending by key.
  const std::map<std::string, MethodEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, MethodEntry> entries_;
};

/// linear, smooth_curve and stationary.
MethodRegistry default_registry();

/// n = max(0, round(dt/interval) - 1) interior instants, evenly spaced.
std::vector<Timestamp> resample_times(const Gap& gap, double target_interval_s);

std::vector<AisRecord> linear_fill(const Gap& gap, std::span<const Timestamp> times);

/// Cubic C(t) = 0.5[2P1 + (P2-P0)t + (2P0-5P1+4P2-P3)t^2 + (3P1-P0-3P2+P3)t^3]
/// between P1 = gap.before and P2 = gap.after. The outer control points are
/// the context fixes extrapolated to one gap length from the boundary, so the
/// end tangents match the observed velocity; absent context mirrors
/// (P0 = 2P1 - P2, P3 = 2P2 - P1).
std::vector<AisRecord> smooth_curve_fill(const Gap& gap, std::span<const Timestamp> times,
                                         const std::optional<AisRecord>& before_context,
                                         const std::optional<AisRecord>& after_context);

std::vector<AisRecord> stationary_fill(const Gap& gap, std::span<const Timestamp> times);

double catmull_rom(double p0, double p1, double p2, double p3, double t);

struct GapContext {
  Gap gap;
  std::vector<StaticAttr> static_attrs;
  std::optional<NodeId> prev_behavior;
  std::optional<NodeId> next_behavior;
  std::optional<AisRecord> before_context;
  std::optional<AisRecord> after_context;
};

struct Selection {
  NodeId behavior;
  std::string method_key;
  std::vector<EvidenceEdge> evidence;
  bool behavior_fallback = false;
  bool method_fallback = false;

  bool fallback_used() const { return behavior_fallback || method_fallback; }
};

/// Top-ranked behavior for the context, then its top-ranked method. An empty
/// ranking falls back to Transit: Steady Course and/or the linear filler.
Selection estimate_and_select(const KnowledgeGraph& g, const GapContext& ctx);

struct ImputedSegment {
  Segment segment;  // provenance imputed; starts at gap.before, ends at gap.after
  std::string gap_id;
  std::string method_key;
  NodeId estimated_behavior;
  std::vector<EvidenceEdge> evidence;
  bool fallback_used = false;
  bool behavior_fallback = false;
  bool method_fallback = false;
  std::vector<StaticAttr> static_attrs;
  std::optional<NodeId> prev_behavior;
  std::optional<NodeId> next_behavior;

  friend bool operator==(const ImputedSegment&, const ImputedSegment&) = default;
};

/// estimate_and_select + resample_times + the selected filler. A Stationary
/// estimate always uses the stationary filler (recorded as override evidence).
ImputedSegment impute_gap(const KnowledgeGraph& g, const MethodRegistry& registry,
                          const GapContext& ctx, double target_interval_s);

/// impute_gap at caller-chosen interior instants (masked evaluation).
ImputedSegment impute_gap_at(const KnowledgeGraph& g, const MethodRegistry& registry,
                             const GapContext& ctx, std::vector<Timestamp> times);

/// Interior of a complete run hidden as a synthetic gap: the first two and
/// last two records stay as context.
struct MaskedRun {
  FillRequest request;
  std::vector<AisRecord> truth;
};
MaskedRun mask_interior(std::span<const AisRecord> records);

/// Mean haversine error (m) of filled points against truth.
double mean_error_m(std::span<const AisRecord> filled, std::span<const AisRecord> truth);

struct BenchmarkResult {
  std::string best;
  std::map<std::string, double> mean_error_m;
};

/// Runs every registered filler on the masked interior of `records`
/// (at least 5); the lowest mean error wins, ties to the smaller key.
BenchmarkResult benchmark(std::span<const AisRecord> records, const MethodRegistry& registry);

}  // namespace vkg
