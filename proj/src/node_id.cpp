#include "vkg/node_id.hpp"

namespace vkg {

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::static_attr: return "static_attr";
    case NodeKind::behavior: return "behavior";
    case NodeKind::method: return "method";
  }
  return "unknown";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "static_attr") return NodeKind::static_attr;
  if (s == "behavior") return NodeKind::behavior;
  if (s == "method") return NodeKind::method;
  return std::nullopt;
}

std::string to_string(const NodeId& id) {
  std::string out(to_string(id.kind));
  out.push_back('/');
  out += id.key;
  return out;
}

std::optional<NodeId> parse_node_id(std::string_view s) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto kind = parse_node_kind(s.substr(0, slash));
  if (!kind || slash + 1 == s.size()) return std::nullopt;
  return NodeId{*kind, std::string(s.substr(slash + 1))};
}

}  // namespace vkg
