#pragma once

#include <span>
#include <string>
#include <vector>

#include "vkg/behavior.hpp"
#include "vkg/sdkg.hpp"
#include "vkg/trajectory.hpp"

namespace vkg {

inline constexpr std::string_view kOpenSea = "open-sea";

/// "near-port:<name>" when either endpoint lies inside its nearest port's
/// radius (the later endpoint wins), "open-sea" otherwise.
std::string spatial_context(LatLon first, LatLon last, const PortDirectory& ports);

/// Modal vessel type, modal navigation status and spatial context of a
/// record run. Always exactly three attributes.
std::vector<StaticAttr> encode_static_attrs(std::span<const AisRecord> records,
                                            const PortDirectory& ports);

/// Same triple for a gap, taken from its two boundary records.
std::vector<StaticAttr> encode_gap_attrs(const Gap& gap, const PortDirectory& ports);

}  // namespace vkg
