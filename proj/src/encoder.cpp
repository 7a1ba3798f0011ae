#include "vkg/encoder.hpp"

namespace vkg {

std::string spatial_context(LatLon first, LatLon last, const PortDirectory& ports) {
  for (const LatLon p : {last, first}) {
    if (const auto n = ports.nearest(p); n && n->inside()) return "near-port:" + n->port->name;
  }
  return std::string(kOpenSea);
}

std::vector<StaticAttr> encode_static_attrs(std::span<const AisRecord> records,
                                            const PortDirectory& ports) {
  if (records.empty()) return {};
  std::vector<std::string> types, nav;
  for (const auto& r : records) {
    types.push_back(r.vessel_type);
    nav.push_back(r.nav_status);
  }
  return {
      {AttrClass::vessel_type, modal_value(types)},
      {AttrClass::nav_status, modal_value(nav)},
      {AttrClass::spatial_context,
       spatial_context(records.front().position(), records.back().position(), ports)},
  };
}

std::vector<StaticAttr> encode_gap_attrs(const Gap& gap, const PortDirectory& ports) {
  return {
      {AttrClass::vessel_type, gap.before.vessel_type},
      {AttrClass::nav_status, gap.before.nav_status},
      {AttrClass::spatial_context,
       spatial_context(gap.before.position(), gap.after.position(), ports)},
  };
}

}  // namespace vkg
