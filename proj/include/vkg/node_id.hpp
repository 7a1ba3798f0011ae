#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace vkg {

enum class NodeKind { static_attr, behavior, method };

std::string_view to_string(NodeKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);

/// Identity of an SD-KG node. `key` is always canonical.
struct NodeId {
  NodeKind kind = NodeKind::static_attr;
  std::string key;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

/// "kind/key", e.g. "behavior/transit: steady course".
std::string to_string(const NodeId& id);
std::optional<NodeId> parse_node_id(std::string_view s);

}  // namespace vkg
