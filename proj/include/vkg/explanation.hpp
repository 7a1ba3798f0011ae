#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vkg/behavior.hpp"
#include "vkg/imputation.hpp"
#include "vkg/sdkg.hpp"

namespace vkg {

inline constexpr std::string_view kFallbackMarker = "fallback: no SD-KG evidence";

struct ReportAttr {
  AttrClass attr_class = AttrClass::vessel_type;
  std::string display;
  NodeId node;
  friend bool operator==(const ReportAttr&, const ReportAttr&) = default;
};

struct BehaviorContext {
  std::optional<NodeId> prev;
  std::optional<NodeId> current;
  std::optional<NodeId> next;
  friend bool operator==(const BehaviorContext&, const BehaviorContext&) = default;
};

/// Three labeled sections; `text()` joins them under CUES / RATIONALE / EVIDENCE.
struct Explanation {
  std::vector<std::string> cues;
  std::vector<std::string> rationale;
  std::vector<std::string> evidence;

  std::string text() const;
  friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct SegmentReport {
  std::string segment_id;
  Mmsi vessel_id;
  Provenance provenance = Provenance::raw;
  std::vector<ReportAttr> static_attributes;
  BehaviorContext behavior_context;
  Explanation explanation;
  std::optional<NodeId> method;
  std::vector<EvidenceEdge> evidence;
  bool fallback_used = false;
  SubgraphDoc subgraph;
  std::vector<NodeId> navigation;

  friend bool operator==(const SegmentReport&, const SegmentReport&) = default;
};

/// What the report needs to know about a raw segment beyond its records.
struct RawSegmentContext {
  Segment segment;
  std::vector<StaticAttr> static_attrs;
  std::optional<SegmentFeatures> features;
  std::optional<NodeId> prev_behavior;
  std::optional<NodeId> next_behavior;
};

/// Percentage with two decimals, rounded half-up from the exact ratio.
std::string format_share(std::uint64_t weight, std::uint64_t total);

/// Throws UnknownNode when the segment's behavior is missing from g.
SegmentReport compose(const RawSegmentContext& ctx, const KnowledgeGraph& g);

/// Throws UnknownNode for non-fallback references missing from g.
SegmentReport compose(const ImputedSegment& seg, const KnowledgeGraph& g);

struct NodeNeighbor {
  NodeId id;
  std::string display;
  std::uint64_t weight = 0;
  std::uint64_t total = 0;  // normalizer of the edge's source side
  friend bool operator==(const NodeNeighbor&, const NodeNeighbor&) = default;
};

struct NodeSuccession {
  NodeId id;
  std::uint64_t count = 0;
  std::uint64_t total = 0;
  friend bool operator==(const NodeSuccession&, const NodeSuccession&) = default;
};

struct NodeReport {
  Node node;
  std::vector<NodeNeighbor> neighbors;  // ordered as sdkg neighbors()
  std::vector<NodeSuccession> predecessors;
  std::vector<NodeSuccession> successors;
  std::vector<std::string> summary;
  std::vector<NodeId> navigation;
  friend bool operator==(const NodeReport&, const NodeReport&) = default;
};

NodeReport report_for_node(const NodeId& id, const KnowledgeGraph& g);

}  // namespace vkg
