#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vkg/behavior.hpp"
#include "vkg/node_id.hpp"

namespace vkg {

/// Trim, collapse whitespace runs to one space, ASCII case-fold.
std::string canonical_key(std::string_view display);

enum class AttrClass { vessel_type, nav_status, spatial_context };
std::string_view to_string(AttrClass c);
std::optional<AttrClass> parse_attr_class(std::string_view s);

struct StaticAttr {
  AttrClass attr_class = AttrClass::vessel_type;
  std::string display;
  auto operator<=>(const StaticAttr&) const = default;
  bool operator==(const StaticAttr&) const = default;
};

/// Static keys are prefixed by their class so that e.g. a vessel type and a
/// navigation status both named "Unknown" stay distinct nodes.
NodeId static_node_id(const StaticAttr& a);
NodeId behavior_node_id(std::string_view pattern_name);
NodeId method_node_id(std::string_view method_key);

struct Node {
  NodeId id;
  std::string display;
  std::optional<AttrClass> attr_class;  // static_attr nodes only
  std::string description;              // behavior and method nodes
  /// seen_count for static_attr and behavior nodes, success_count for method nodes.
  std::uint64_t count = 0;

  friend bool operator==(const Node&, const Node&) = default;
};

struct MethodRef {
  std::string key;
  std::string display;
  std::string description;
};

/// Everything one eligible segment contributes to the graph.
struct Observation {
  std::vector<StaticAttr> static_attrs;
  BehaviorPattern behavior;
  std::optional<MethodRef> best_method;
  std::optional<BehaviorPattern> prev_behavior;
};

using NodePair = std::pair<NodeId, NodeId>;

struct Edge {
  NodeId a;
  NodeId b;
  std::uint64_t weight = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct UnknownNode : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct EmptyRanking : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Weighted tripartite graph over static attributes, behavior patterns and
/// imputation methods. Edges only ever join static->behavior (E_sb) or
/// behavior->method (E_bf); behavior->behavior succession is kept in a
/// separate transition table. All weights are integer counts.
class KnowledgeGraph {
 public:
  void observe(const Observation& obs);
  void merge(const KnowledgeGraph& other);

  const Node* find(const NodeId& id) const;
  const Node& at(const NodeId& id) const;  // throws UnknownNode
  bool contains(const NodeId& id) const { return nodes_.contains(id); }

  std::uint64_t weight(const NodeId& a, const NodeId& b) const;
  std::uint64_t transition(const NodeId& from, const NodeId& to) const;

  /// Sum of weights of edges leaving `a` (E_sb for static nodes, E_bf for behaviors).
  std::uint64_t out_weight(const NodeId& a) const;
  std::uint64_t out_transitions(const NodeId& from) const;

  /// Edges leaving `a`, ascending by target id.
  std::vector<Edge> out_edges(const NodeId& a) const;

  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::map<NodePair, std::uint64_t>& edges() const { return edges_; }
  const std::map<NodePair, std::uint64_t>& transitions() const { return transitions_; }

  bool empty() const { return nodes_.empty(); }
  std::size_t count_nodes(NodeKind kind) const;

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

 private:
  friend KnowledgeGraph load_graph(std::string_view document);

  Node& upsert(const NodeId& id, std::string_view display, std::string_view description);

  std::map<NodeId, Node> nodes_;
  std::map<NodePair, std::uint64_t> edges_;
  std::map<NodePair, std::uint64_t> transitions_;
};

/// Value-returning forms of the graph updates.
KnowledgeGraph observe_segment(KnowledgeGraph g, const Observation& obs);
KnowledgeGraph merge(KnowledgeGraph a, const KnowledgeGraph& b);

struct Ranked {
  NodeId id;
  double score = 0.0;
  friend bool operator==(const Ranked&, const Ranked&) = default;
};

/// score(b) = sum over known attrs s of w(s,b)/sum_b' w(s,b')
///          + lambda * t(prev,b)/sum_b' t(prev,b')
/// Descending by score, ties ascending by key. Throws EmptyRanking when no
/// behavior scores above zero.
std::vector<Ranked> rank_behaviors(const KnowledgeGraph& g, std::span<const StaticAttr> attrs,
                                   const std::optional<NodeId>& prev_behavior, std::size_t k,
                                   double lambda = 1.0);

/// score(m) = w(b,m)/sum_m' w(b,m'). Throws EmptyRanking when b has no method edges.
std::vector<Ranked> rank_methods(const KnowledgeGraph& g, const NodeId& behavior, std::size_t k);

enum class EvidenceRelation { attr_behavior, transition, behavior_method, override_rule };
std::string_view to_string(EvidenceRelation r);
std::optional<EvidenceRelation> parse_evidence_relation(std::string_view s);

/// One edge (or transition) that fed a ranking score, with its normalized share.
struct EvidenceEdge {
  EvidenceRelation relation = EvidenceRelation::attr_behavior;
  NodeId from;
  NodeId to;
  std::uint64_t weight = 0;
  std::uint64_t total = 0;

  double share() const { return total == 0 ? 0.0 : static_cast<double>(weight) / static_cast<double>(total); }
  friend bool operator==(const EvidenceEdge&, const EvidenceEdge&) = default;
};

std::vector<EvidenceEdge> behavior_evidence(const KnowledgeGraph& g,
                                            std::span<const StaticAttr> attrs,
                                            const std::optional<NodeId>& prev_behavior,
                                            const NodeId& behavior);
std::vector<EvidenceEdge> method_evidence(const KnowledgeGraph& g, const NodeId& behavior,
                                          const NodeId& method);

struct Neighbor {
  NodeId id;
  std::uint64_t weight = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Incident edges, descending weight then ascending key. Throws UnknownNode.
std::vector<Neighbor> neighbors(const KnowledgeGraph& g, const NodeId& id);

struct SubgraphDoc {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  friend bool operator==(const SubgraphDoc&, const SubgraphDoc&) = default;
};

/// Nodes: the behavior, the segment's attributes and method when present in
/// the graph, plus every method adjacent to the behavior. Edges: all graph
/// edges between those nodes.
SubgraphDoc subgraph_for_segment(const KnowledgeGraph& g, std::span<const StaticAttr> seg_attrs,
                                 const NodeId& behavior, const std::optional<NodeId>& method);

/// True when every edge endpoint is in the node set.
bool is_edge_closed(const SubgraphDoc& doc);

inline constexpr int kGraphFormatVersion = 1;

std::string save_graph(const KnowledgeGraph& g);
KnowledgeGraph load_graph(std::string_view document);  // throws SchemaError

}  // namespace vkg
