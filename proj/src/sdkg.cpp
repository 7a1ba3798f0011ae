#include "vkg/sdkg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace vkg {

using nlohmann::json;

std::string canonical_key(std::string_view display) {
  std::string out;
  out.reserve(display.size());
  bool pending_space = false;
  for (char c : display) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
  }
  return out;
}

std::string_view to_string(AttrClass c) {
  switch (c) {
    case AttrClass::vessel_type: return "vessel_type";
    case AttrClass::nav_status: return "nav_status";
    case AttrClass::spatial_context: return "spatial_context";
  }
  return "unknown";
}

std::optional<AttrClass> parse_attr_class(std::string_view s) {
  if (s == "vessel_type") return AttrClass::vessel_type;
  if (s == "nav_status") return AttrClass::nav_status;
  if (s == "spatial_context") return AttrClass::spatial_context;
  return std::nullopt;
}

NodeId static_node_id(const StaticAttr& a) {
  return {NodeKind::static_attr, std::string(to_string(a.attr_class)) + ":" + canonical_key(a.display)};
}
NodeId behavior_node_id(std::string_view pattern_name) {
  return {NodeKind::behavior, canonical_key(pattern_name)};
}
NodeId method_node_id(std::string_view method_key) {
  return {NodeKind::method, canonical_key(method_key)};
}

std::string_view to_string(EvidenceRelation r) {
  switch (r) {
    case EvidenceRelation::attr_behavior: return "attr_behavior";
    case EvidenceRelation::transition: return "transition";
    case EvidenceRelation::behavior_method: return "behavior_method";
    case EvidenceRelation::override_rule: return "override";
  }
  return "unknown";
}

std::optional<EvidenceRelation> parse_evidence_relation(std::string_view s) {
  if (s == "attr_behavior") return EvidenceRelation::attr_behavior;
  if (s == "transition") return EvidenceRelation::transition;
  if (s == "behavior_method") return EvidenceRelation::behavior_method;
  if (s == "override") return EvidenceRelation::override_rule;
  return std::nullopt;
}

namespace {

// Text fields resolve to the smallest non-empty candidate so that the
// result does not depend on observation or merge order.
void settle(std::string& slot, std::string_view candidate) {
  if (candidate.empty()) return;
  if (slot.empty() || candidate < slot) slot = std::string(candidate);
}

bool allowed_edge(NodeKind a, NodeKind b) {
  return (a == NodeKind::static_attr && b == NodeKind::behavior) ||
         (a == NodeKind::behavior && b == NodeKind::method);
}

auto range_from(const std::map<NodePair, std::uint64_t>& m, const NodeId& a) {
  return m.lower_bound(NodePair{a, NodeId{NodeKind::static_attr, {}}});
}

}  // namespace

Node& KnowledgeGraph::upsert(const NodeId& id, std::string_view display,
                             std::string_view description) {
  auto [it, inserted] = nodes_.try_emplace(id);
  Node& n = it->second;
  if (inserted) n.id = id;
  settle(n.display, display);
  settle(n.description, description);
  return n;
}

void KnowledgeGraph::observe(const Observation& obs) {
  const NodeId b = behavior_node_id(obs.behavior.name);
  upsert(b, obs.behavior.name, obs.behavior.description).count += 1;

  std::set<StaticAttr> attrs(obs.static_attrs.begin(), obs.static_attrs.end());
  for (const auto& a : attrs) {
    const NodeId s = static_node_id(a);
    Node& n = upsert(s, a.display, {});
    n.attr_class = a.attr_class;
    n.count += 1;
    edges_[{s, b}] += 1;
  }
  if (obs.best_method) {
    const NodeId m = method_node_id(obs.best_method->key);
    upsert(m, obs.best_method->display, obs.best_method->description).count += 1;
    edges_[{b, m}] += 1;
  }
  if (obs.prev_behavior) {
    const NodeId p = behavior_node_id(obs.prev_behavior->name);
    upsert(p, obs.prev_behavior->name, obs.prev_behavior->description);
    transitions_[{p, b}] += 1;
  }
}

void KnowledgeGraph::merge(const KnowledgeGraph& other) {
  for (const auto& [id, n] : other.nodes_) {
    Node& mine = upsert(id, n.display, n.description);
    if (n.attr_class) mine.attr_class = n.attr_class;
    mine.count += n.count;
  }
  for (const auto& [k, w] : other.edges_) edges_[k] += w;
  for (const auto& [k, w] : other.transitions_) transitions_[k] += w;
}

const Node* KnowledgeGraph::find(const NodeId& id) const {
  const auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const Node& KnowledgeGraph::at(const NodeId& id) const {
  if (const auto* n = find(id)) return *n;
  throw UnknownNode("unknown node " + to_string(id));
}

std::uint64_t KnowledgeGraph::weight(const NodeId& a, const NodeId& b) const {
  const auto it = edges_.find({a, b});
  return it == edges_.end() ? 0 : it->second;
}

std::uint64_t KnowledgeGraph::transition(const NodeId& from, const NodeId& to) const {
  const auto it = transitions_.find({from, to});
  return it == transitions_.end() ? 0 : it->second;
}

std::uint64_t KnowledgeGraph::out_weight(const NodeId& a) const {
  std::uint64_t total = 0;
  for (auto it = range_from(edges_, a); it != edges_.end() && it->first.first == a; ++it)
    total += it->second;
  return total;
}

std::uint64_t KnowledgeGraph::out_transitions(const NodeId& from) const {
  std::uint64_t total = 0;
  for (auto it = range_from(transitions_, from); it != transitions_.end() && it->first.first == from;
       ++it)
    total += it->second;
  return total;
}

std::vector<Edge> KnowledgeGraph::out_edges(const NodeId& a) const {
  std::vector<Edge> out;
  for (auto it = range_from(edges_, a); it != edges_.end() && it->first.first == a; ++it)
    out.push_back(Edge{a, it->first.second, it->second});
  return out;
}

std::size_t KnowledgeGraph::count_nodes(NodeKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [&](const auto& kv) { return kv.first.kind == kind; }));
}

KnowledgeGraph observe_segment(KnowledgeGraph g, const Observation& obs) {
  g.observe(obs);
  return g;
}

KnowledgeGraph merge(KnowledgeGraph a, const KnowledgeGraph& b) {
  a.merge(b);
  return a;
}

namespace {

std::vector<Ranked> finish_ranking(std::map<NodeId, double> scores, std::size_t k,
                                   const char* what) {
  std::vector<Ranked> out;
  for (auto& [id, s] : scores)
    if (s > 0.0) out.push_back(Ranked{id, s});
  if (out.empty()) throw EmptyRanking(what);
  std::sort(out.begin(), out.end(), [](const Ranked& x, const Ranked& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.id.key < y.id.key;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::set<NodeId> known_attr_ids(const KnowledgeGraph& g, std::span<const StaticAttr> attrs) {
  std::set<NodeId> ids;
  for (const auto& a : attrs) {
    auto id = static_node_id(a);
    if (g.contains(id)) ids.insert(std::move(id));
  }
  return ids;
}

}  // namespace

std::vector<Ranked> rank_behaviors(const KnowledgeGraph& g, std::span<const StaticAttr> attrs,
                                   const std::optional<NodeId>& prev_behavior, std::size_t k,
                                   double lambda) {
  if (k == 0) throw std::invalid_argument("rank_behaviors: k must be positive");
  std::map<NodeId, double> scores;
  for (const auto& s : known_attr_ids(g, attrs)) {
    const auto total = g.out_weight(s);
    if (total == 0) continue;
    for (const auto& e : g.out_edges(s))
      scores[e.b] += static_cast<double>(e.weight) / static_cast<double>(total);
  }
  if (prev_behavior && g.contains(*prev_behavior)) {
    const auto total = g.out_transitions(*prev_behavior);
    if (total > 0) {
      for (const auto& [key, t] : g.transitions())
        if (key.first == *prev_behavior)
          scores[key.second] += lambda * static_cast<double>(t) / static_cast<double>(total);
    }
  }
  return finish_ranking(std::move(scores), k, "no behavior has positive support");
}

std::vector<Ranked> rank_methods(const KnowledgeGraph& g, const NodeId& behavior, std::size_t k) {
  if (k == 0) throw std::invalid_argument("rank_methods: k must be positive");
  if (behavior.kind != NodeKind::behavior)
    throw std::invalid_argument("rank_methods: node is not a behavior");
  const auto total = g.out_weight(behavior);
  std::map<NodeId, double> scores;
  if (total > 0)
    for (const auto& e : g.out_edges(behavior))
      scores[e.b] = static_cast<double>(e.weight) / static_cast<double>(total);
  return finish_ranking(std::move(scores), k, "behavior has no method edges");
}

std::vector<EvidenceEdge> behavior_evidence(const KnowledgeGraph& g,
                                            std::span<const StaticAttr> attrs,
                                            const std::optional<NodeId>& prev_behavior,
                                            const NodeId& behavior) {
  std::vector<EvidenceEdge> out;
  for (const auto& s : known_attr_ids(g, attrs)) {
    const auto w = g.weight(s, behavior);
    if (w > 0) out.push_back({EvidenceRelation::attr_behavior, s, behavior, w, g.out_weight(s)});
  }
  if (prev_behavior) {
    const auto t = g.transition(*prev_behavior, behavior);
    if (t > 0)
      out.push_back({EvidenceRelation::transition, *prev_behavior, behavior, t,
                     g.out_transitions(*prev_behavior)});
  }
  return out;
}

std::vector<EvidenceEdge> method_evidence(const KnowledgeGraph& g, const NodeId& behavior,
                                          const NodeId& method) {
  const auto w = g.weight(behavior, method);
  if (w == 0) return {};
  return {{EvidenceRelation::behavior_method, behavior, method, w, g.out_weight(behavior)}};
}

std::vector<Neighbor> neighbors(const KnowledgeGraph& g, const NodeId& id) {
  if (!g.contains(id)) throw UnknownNode("unknown node " + to_string(id));
  std::vector<Neighbor> out;
  for (const auto& [key, w] : g.edges()) {
    if (key.first == id) out.push_back({key.second, w});
    else if (key.second == id) out.push_back({key.first, w});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.id.key != b.id.key) return a.id.key < b.id.key;
    return a.id.kind < b.id.kind;
  });
  return out;
}

SubgraphDoc subgraph_for_segment(const KnowledgeGraph& g, std::span<const StaticAttr> seg_attrs,
                                 const NodeId& behavior, const std::optional<NodeId>& method) {
  if (!g.contains(behavior)) throw UnknownNode("unknown node " + to_string(behavior));
  std::set<NodeId> ids = known_attr_ids(g, seg_attrs);
  ids.insert(behavior);
  if (method && g.contains(*method)) ids.insert(*method);
  for (const auto& e : g.out_edges(behavior)) ids.insert(e.b);

  SubgraphDoc doc;
  for (const auto& id : ids) doc.nodes.push_back(g.at(id));
  for (const auto& [key, w] : g.edges())
    if (ids.contains(key.first) && ids.contains(key.second)) doc.edges.push_back({key.first, key.second, w});
  return doc;
}

bool is_edge_closed(const SubgraphDoc& doc) {
  std::set<NodeId> ids;
  for (const auto& n : doc.nodes) ids.insert(n.id);
  return std::all_of(doc.edges.begin(), doc.edges.end(),
                     [&](const Edge& e) { return ids.contains(e.a) && ids.contains(e.b); });
}

std::string save_graph(const KnowledgeGraph& g) {
  json nodes = json::array();
  for (const auto& [id, n] : g.nodes()) {
    json j{{"kind", to_string(id.kind)}, {"key", id.key}, {"display", n.display}};
    if (id.kind == NodeKind::static_attr) {
      j["attr_class"] = n.attr_class ? to_string(*n.attr_class) : "vessel_type";
      j["seen_count"] = n.count;
    } else {
      j["description"] = n.description;
      j[id.kind == NodeKind::method ? "success_count" : "seen_count"] = n.count;
    }
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& [key, w] : g.edges())
    edges.push_back({{"from", to_string(key.first)}, {"to", to_string(key.second)}, {"weight", w}});
  json transitions = json::array();
  for (const auto& [key, t] : g.transitions())
    transitions.push_back(
        {{"from", to_string(key.first)}, {"to", to_string(key.second)}, {"count", t}});
  json doc{{"format", "vkg.sdkg"},
           {"format_version", kGraphFormatVersion},
           {"nodes", std::move(nodes)},
           {"edges", std::move(edges)},
           {"transitions", std::move(transitions)}};
  return doc.dump(2) + "\n";
}

KnowledgeGraph load_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("graph document is not valid: ") + e.what());
  }
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw SchemaError("graph document: " + msg);
  };
  auto node_ref = [&](const json& j) {
    require(j.is_string(), "edge endpoint must be a string id");
    auto id = parse_node_id(j.get<std::string>());
    require(id.has_value(), "bad node id " + j.dump());
    return *id;
  };
  auto count_of = [&](const json& j, const char* field) -> std::uint64_t {
    require(j.contains(field) && j[field].is_number_unsigned(), std::string("missing ") + field);
    return j[field].get<std::uint64_t>();
  };

  require(doc.is_object(), "root must be an object");
  require(doc.value("format", "") == "vkg.sdkg", "wrong format tag");
  require(doc.contains("format_version") && doc["format_version"] == kGraphFormatVersion,
          "unsupported format_version");
  for (const char* field : {"nodes", "edges", "transitions"})
    require(doc.contains(field) && doc[field].is_array(), std::string("missing array ") + field);

  KnowledgeGraph g;
  try {
    for (const auto& j : doc["nodes"]) {
      require(j.is_object(), "node must be an object");
      const auto kind = parse_node_kind(j.at("kind").get<std::string>());
      require(kind.has_value(), "bad node kind");
      Node n;
      n.id = NodeId{*kind, j.at("key").get<std::string>()};
      require(!n.id.key.empty() && canonical_key(n.id.key) == n.id.key, "non-canonical key");
      n.display = j.at("display").get<std::string>();
      if (*kind == NodeKind::static_attr) {
        const auto cls = parse_attr_class(j.at("attr_class").get<std::string>());
        require(cls.has_value(), "bad attr_class");
        n.attr_class = cls;
        n.count = count_of(j, "seen_count");
      } else {
        n.description = j.at("description").get<std::string>();
        n.count = count_of(j, *kind == NodeKind::method ? "success_count" : "seen_count");
      }
      require(g.nodes_.emplace(n.id, n).second, "duplicate node " + to_string(n.id));
    }
    for (const auto& j : doc["edges"]) {
      const auto a = node_ref(j.at("from"));
      const auto b = node_ref(j.at("to"));
      require(allowed_edge(a.kind, b.kind), "edge violates tripartite structure");
      require(g.contains(a) && g.contains(b), "dangling edge");
      const auto w = count_of(j, "weight");
      require(w >= 1, "edge weight must be positive");
      require(g.edges_.emplace(NodePair{a, b}, w).second, "duplicate edge");
    }
    for (const auto& j : doc["transitions"]) {
      const auto a = node_ref(j.at("from"));
      const auto b = node_ref(j.at("to"));
      require(a.kind == NodeKind::behavior && b.kind == NodeKind::behavior,
              "transition between non-behavior nodes");
      require(g.contains(a) && g.contains(b), "dangling transition");
      const auto c = count_of(j, "count");
      require(c >= 1, "transition count must be positive");
      require(g.transitions_.emplace(NodePair{a, b}, c).second, "duplicate transition");
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("graph document: ") + e.what());
  }
  return g;
}

}  // namespace vkg
