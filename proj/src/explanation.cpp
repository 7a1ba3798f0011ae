#include "vkg/explanation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace vkg {
namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string km(double meters) { return fixed(meters / 1000.0, 2) + " km"; }
std::string kn(double v) { return fixed(v, 2) + " kn"; }

std::string display_of(const KnowledgeGraph& g, const NodeId& id) {
  if (const auto* n = g.find(id); n && !n->display.empty()) return n->display;
  return id.key;
}

std::string behavior_rationale(std::string_view name) {
  if (name == patterns::kStationary)
    return "Near-zero speed over the whole segment indicates the vessel is holding position at a "
           "berth, anchorage or station.";
  if (name == patterns::kPortEntry)
    return "A marked speed reduction that ends inside a port's approach radius is the signature "
           "of a vessel slowing down and aligning with the fairway to enter port.";
  if (name == patterns::kPortExit)
    return "A marked speed increase that starts inside a port's approach radius is the "
           "signature of a vessel leaving port and settling onto its outbound track.";
  if (name == patterns::kTransit)
    return "A nearly straight track at steady cruising speed indicates passage between areas "
           "with no operational change.";
  if (name == patterns::kManeuver)
    return "Large cumulative course change shows the vessel altering its route or "
           "manoeuvring.";
  if (name == patterns::kDrift)
    return "Low or irregular speed without a clear direction matches drifting, loitering or "
           "fishing activity.";
  return "Behavior pattern outside the built-in taxonomy.";
}

std::string method_rationale(std::string_view key) {
  if (key == methods::kLinear)
    return "The linear filler reconstructs the gap as a straight path at uniform speed between "
           "the last and first observed fixes.";
  if (key == methods::kSmoothCurve)
    return "The smooth curve filler bends the reconstructed path to follow the vessel's heading "
           "into and out of the gap, avoiding corner artifacts on curved approaches.";
  if (key == methods::kStationary)
    return "The stationary filler keeps the vessel at its last observed position with zero "
           "speed, since a holding vessel does not move during the gap.";
  return "Method selected by SD-KG ranking.";
}

std::string evidence_line(const EvidenceEdge& e, const KnowledgeGraph& g) {
  const auto from = display_of(g, e.from);
  const auto to = display_of(g, e.to);
  const auto share = format_share(e.weight, e.total);
  switch (e.relation) {
    case EvidenceRelation::attr_behavior:
      return from + " → " + to + ": " + std::to_string(e.weight) + " of " +
             std::to_string(e.total) + " segments (" + share + ")";
    case EvidenceRelation::transition:
      return from + " → " + to + ": " + std::to_string(e.weight) + " of " +
             std::to_string(e.total) + " transitions (" + share + ")";
    case EvidenceRelation::behavior_method:
      return from + " → " + to + ": " + std::to_string(e.weight) + " of " +
             std::to_string(e.total) + " (" + share + ")";
    case EvidenceRelation::override_rule:
      return "override: " + from + " forces " + to;
  }
  return {};
}

std::vector<ReportAttr> report_attrs(std::span<const StaticAttr> attrs) {
  std::vector<ReportAttr> out;
  for (const auto& a : attrs) out.push_back({a.attr_class, a.display, static_node_id(a)});
  return out;
}

std::string attr_list(std::span<const StaticAttr> attrs) {
  std::string out;
  for (const auto& a : attrs) {
    if (!out.empty()) out += ", ";
    out += std::string(to_string(a.attr_class)) + "=" + a.display;
  }
  return out;
}

std::vector<std::string> feature_cues(const SegmentFeatures& f, std::string_view behavior) {
  std::vector<std::string> cues;
  if (behavior == patterns::kPortEntry && f.start_sog && f.end_sog && f.end_port)
    cues.push_back("mean speed fell from " + kn(*f.start_sog) + " to " + kn(*f.end_sog) +
                   " approaching port " + f.end_port->port + " (" + km(f.end_port->distance_m) +
                   ")");
  if (behavior == patterns::kPortExit && f.start_sog && f.end_sog && f.start_port)
    cues.push_back("mean speed rose from " + kn(*f.start_sog) + " to " + kn(*f.end_sog) +
                   " leaving port " + f.start_port->port + " (" + km(f.start_port->distance_m) +
                   ")");
  if (f.mean_sog)
    cues.push_back("speed: mean " + kn(*f.mean_sog) + ", start " + kn(*f.start_sog) + ", end " +
                   kn(*f.end_sog) + ", std " + kn(*f.sog_std));
  else
    cues.push_back("speed: not reported");
  cues.push_back("track: straightness " + fixed(f.straightness, 2) + " over " +
                 km(f.path_length_m) + " (net " + km(f.net_displacement_m) + ")");
  cues.push_back("course change: " + fixed(f.total_course_change, 1) + " deg");
  if (f.end_port)
    cues.push_back("nearest port at end: " + f.end_port->port + " (" + km(f.end_port->distance_m) +
                   ", radius " + km(f.end_port->radius_m) + ")");
  cues.push_back("duration: " + fixed(f.duration_s, 0) + " s; status " + f.modal_nav_status +
                 "; vessel type " + f.modal_vessel_type);
  return cues;
}

std::vector<NodeId> navigation_for(const SegmentReport& r) {
  std::vector<NodeId> nav;
  std::set<NodeId> seen;
  auto push = [&](const std::optional<NodeId>& id) {
    if (id && seen.insert(*id).second) nav.push_back(*id);
  };
  for (const auto& a : r.static_attributes) push(a.node);
  push(r.behavior_context.prev);
  push(r.behavior_context.current);
  push(r.behavior_context.next);
  push(r.method);
  for (const auto& n : r.subgraph.nodes) push(n.id);
  return nav;
}

// Navigation only offers nodes that exist in the graph.
void prune_navigation(SegmentReport& r, const KnowledgeGraph& g) {
  auto nav = navigation_for(r);
  std::erase_if(nav, [&](const NodeId& id) { return !g.contains(id); });
  r.navigation = std::move(nav);
}

std::optional<NodeId> known(const std::optional<NodeId>& id, const KnowledgeGraph& g) {
  if (id && g.contains(*id)) return id;
  return std::nullopt;
}

}  // namespace

std::string Explanation::text() const {
  std::string out;
  auto section = [&](const char* label, const std::vector<std::string>& lines) {
    out += label;
    out += ":\n";
    for (const auto& l : lines) out += "- " + l + "\n";
  };
  section("CUES", cues);
  section("RATIONALE", rationale);
  section("EVIDENCE", evidence);
  return out;
}

std::string format_share(std::uint64_t weight, std::uint64_t total) {
  if (total == 0) return "0.00%";
  // hundredths of a percent, half-up
  const unsigned __int128 num = static_cast<unsigned __int128>(weight) * 20000u + total;
  const auto hundredths = static_cast<std::uint64_t>(num / (2u * static_cast<unsigned __int128>(total)));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%llu.%02llu%%", static_cast<unsigned long long>(hundredths / 100),
                static_cast<unsigned long long>(hundredths % 100));
  return buf;
}

SegmentReport compose(const RawSegmentContext& ctx, const KnowledgeGraph& g) {
  const Segment& seg = ctx.segment;
  SegmentReport r;
  r.segment_id = seg.segment_id;
  r.vessel_id = seg.vessel_id;
  r.provenance = Provenance::raw;
  r.static_attributes = report_attrs(ctx.static_attrs);
  r.behavior_context = {known(ctx.prev_behavior, g), seg.behavior_id, known(ctx.next_behavior, g)};

  if (!seg.behavior_id) {
    r.explanation.cues.push_back(
        seg.eligible() ? "segment has " + std::to_string(seg.records.size()) +
                             " records but no behavior was abstracted (implied speed over the limit "
                             "or abstraction failure)"
                       : "segment has " + std::to_string(seg.records.size()) +
                             " record(s); too short for behavior abstraction");
    r.explanation.rationale.push_back("No behavior pattern is assigned to this segment.");
    prune_navigation(r, g);
    return r;
  }

  const NodeId& behavior = *seg.behavior_id;
  const Node& bnode = g.at(behavior);
  if (ctx.features) r.explanation.cues = feature_cues(*ctx.features, bnode.display);
  r.explanation.rationale.push_back(bnode.display + ": " + behavior_rationale(bnode.display));

  r.evidence = behavior_evidence(g, ctx.static_attrs, r.behavior_context.prev, behavior);
  for (const auto& e : r.evidence) r.explanation.evidence.push_back(evidence_line(e, g));
  if (r.evidence.empty()) r.explanation.evidence.push_back("no supporting SD-KG edges");

  r.subgraph = subgraph_for_segment(g, ctx.static_attrs, behavior, std::nullopt);
  prune_navigation(r, g);
  return r;
}

SegmentReport compose(const ImputedSegment& seg, const KnowledgeGraph& g) {
  SegmentReport r;
  r.segment_id = seg.segment.segment_id;
  r.vessel_id = seg.segment.vessel_id;
  r.provenance = Provenance::imputed;
  r.static_attributes = report_attrs(seg.static_attrs);
  r.behavior_context = {known(seg.prev_behavior, g), seg.estimated_behavior,
                        known(seg.next_behavior, g)};
  r.method = method_node_id(seg.method_key);
  r.evidence = seg.evidence;
  r.fallback_used = seg.fallback_used;

  for (const auto& e : seg.evidence) {
    if (e.relation == EvidenceRelation::override_rule) continue;
    g.at(e.from);
    g.at(e.to);
  }
  if (!seg.behavior_fallback) g.at(seg.estimated_behavior);

  const auto& recs = seg.segment.records;
  const auto& before = recs.front();
  const auto& after = recs.back();
  const double dt = to_seconds(after.timestamp - before.timestamp);
  auto& cues = r.explanation.cues;
  cues.push_back("gap of " + fixed(dt, 0) + " s (" + fixed(dt / 60.0, 1) + " min) from " +
                 format_timestamp(before.timestamp) + " to " + format_timestamp(after.timestamp));
  cues.push_back("gap spans " + km(haversine(before.position(), after.position())) + " from (" +
                 fixed(before.lat, 5) + ", " + fixed(before.lon, 5) + ") to (" +
                 fixed(after.lat, 5) + ", " + fixed(after.lon, 5) + ")");
  if (before.sog && after.sog)
    cues.push_back("speed at gap boundaries: " + kn(*before.sog) + " → " + kn(*after.sog));
  cues.push_back("context: " + attr_list(seg.static_attrs));
  cues.push_back("adjacent behaviors: previous " +
                 (seg.prev_behavior ? display_of(g, *seg.prev_behavior) : std::string("none")) +
                 ", next " +
                 (seg.next_behavior ? display_of(g, *seg.next_behavior) : std::string("none")));
  cues.push_back(std::to_string(recs.size() - 2) + " interior points reconstructed");

  const auto bdisplay = display_of(g, seg.estimated_behavior);
  const auto behavior_name =
      g.contains(seg.estimated_behavior) ? bdisplay : std::string(patterns::kTransit);
  r.explanation.rationale.push_back(behavior_name + ": " + behavior_rationale(behavior_name));
  r.explanation.rationale.push_back(method_rationale(seg.method_key));

  for (const auto& e : seg.evidence) r.explanation.evidence.push_back(evidence_line(e, g));
  if (seg.fallback_used) r.explanation.evidence.push_back(std::string(kFallbackMarker));

  if (g.contains(seg.estimated_behavior))
    r.subgraph = subgraph_for_segment(g, seg.static_attrs, seg.estimated_behavior, r.method);
  prune_navigation(r, g);
  return r;
}

NodeReport report_for_node(const NodeId& id, const KnowledgeGraph& g) {
  NodeReport r;
  r.node = g.at(id);
  for (const auto& n : neighbors(g, id)) {
    // The edge's source side is whichever endpoint comes first in the tripartite order.
    const bool outgoing = g.weight(id, n.id) > 0;
    const NodeId& source = outgoing ? id : n.id;
    r.neighbors.push_back({n.id, display_of(g, n.id), n.weight, g.out_weight(source)});
    r.navigation.push_back(n.id);
  }
  if (id.kind == NodeKind::behavior) {
    for (const auto& [key, c] : g.transitions()) {
      if (key.second == id) r.predecessors.push_back({key.first, c, g.out_transitions(key.first)});
      if (key.first == id) r.successors.push_back({key.second, c, g.out_transitions(id)});
    }
    for (const auto* list : {&r.predecessors, &r.successors})
      for (const auto& s : *list)
        if (std::find(r.navigation.begin(), r.navigation.end(), s.id) == r.navigation.end())
          r.navigation.push_back(s.id);
  }

  const auto& n = r.node;
  switch (id.kind) {
    case NodeKind::static_attr:
      r.summary.push_back(n.display + " was recorded in " + std::to_string(n.count) + " segments");
      for (const auto& nb : r.neighbors)
        r.summary.push_back(nb.display + ": " + std::to_string(nb.weight) + " of " +
                            std::to_string(nb.total) + " segments (" +
                            format_share(nb.weight, nb.total) + ")");
      break;
    case NodeKind::behavior:
      r.summary.push_back(n.display + " was observed in " + std::to_string(n.count) + " segments");
      for (const auto& nb : r.neighbors)
        r.summary.push_back(nb.display + ": " + std::to_string(nb.weight) + " of " +
                            std::to_string(nb.total) + " (" + format_share(nb.weight, nb.total) +
                            ")");
      break;
    case NodeKind::method:
      r.summary.push_back(n.display + " was the best reconstruction in " + std::to_string(n.count) +
                          " benchmarked segments");
      for (const auto& nb : r.neighbors)
        r.summary.push_back("serves " + nb.display + ": " + std::to_string(nb.weight) + " of " +
                            std::to_string(nb.total) + " successes (" +
                            format_share(nb.weight, nb.total) + ")");
      break;
  }
  return r;
}

}  // namespace vkg
