#include "vkg/behavior.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "vkg/ais_record.hpp"

namespace vkg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<PortProximity> proximity(const PortDirectory& ports, LatLon p) {
  const auto n = ports.nearest(p);
  if (!n) return std::nullopt;
  return PortProximity{n->port->name, n->distance_m, n->port->radius_m};
}

}  // namespace

PortDirectory::PortDirectory(std::vector<Port> ports) : ports_(std::move(ports)) {
  for (const auto& p : ports_)
    if (!(p.radius_m > 0.0)) throw std::invalid_argument("port radius must be positive: " + p.name);
}

PortDirectory PortDirectory::parse(std::string_view text) {
  std::vector<Port> ports;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cols = split_row(view, ',');
    if (cols.size() != 4) throw std::invalid_argument("port line needs name,lat,lon,radius_m");
    const auto lat = to_double(cols[1]);
    const auto lon = to_double(cols[2]);
    const auto radius = to_double(cols[3]);
    if (!lat || !lon || !radius) {
      if (ports.empty() && !lat) continue;  // header row
      throw std::invalid_argument("bad port line: " + line);
    }
    ports.push_back(Port{std::string(trim(cols[0])), *lat, *lon, *radius});
  }
  return PortDirectory(std::move(ports));
}

PortDirectory PortDirectory::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::optional<PortDirectory::Nearest> PortDirectory::nearest(LatLon p) const {
  std::optional<Nearest> best;
  for (const auto& port : ports_) {
    const double d = haversine(p, {port.lat, port.lon});
    if (!best || d < best->distance_m) best = Nearest{&port, d};
  }
  return best;
}

std::string modal_value(std::span<const std::string> values) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::string_view best;
  std::size_t best_n = 0;
  for (const auto& [v, n] : counts)
    if (n > best_n) {
      best = v;
      best_n = n;
    }
  return std::string(best);
}

SegmentFeatures extract_features(std::span<const AisRecord> records, const PortDirectory& ports) {
  if (records.size() < 2) throw TooShort("feature extraction needs at least 2 records");
  SegmentFeatures f;

  std::vector<double> sogs;
  for (const auto& r : records)
    if (r.sog) sogs.push_back(*r.sog);
  if (!sogs.empty()) {
    double sum = 0.0;
    for (double s : sogs) sum += s;
    const double mean = sum / static_cast<double>(sogs.size());
    double var = 0.0;
    for (double s : sogs) var += (s - mean) * (s - mean);
    f.mean_sog = mean;
    f.sog_std = std::sqrt(var / static_cast<double>(sogs.size()));
    f.start_sog = sogs.front();
    f.end_sog = sogs.back();
  }

  std::optional<double> last_cog;
  for (const auto& r : records) {
    if (!r.cog) continue;
    if (last_cog) f.total_course_change += std::abs(shortest_arc(*last_cog, *r.cog));
    last_cog = r.cog;
  }

  for (std::size_t i = 1; i < records.size(); ++i)
    f.path_length_m += haversine(records[i - 1].position(), records[i].position());
  f.net_displacement_m = haversine(records.front().position(), records.back().position());
  f.straightness =
      f.path_length_m == 0.0 ? 1.0 : std::clamp(f.net_displacement_m / f.path_length_m, 0.0, 1.0);

  f.start_port = proximity(ports, records.front().position());
  f.end_port = proximity(ports, records.back().position());

  std::vector<std::string> nav, types;
  nav.reserve(records.size());
  types.reserve(records.size());
  for (const auto& r : records) {
    nav.push_back(r.nav_status);
    types.push_back(r.vessel_type);
  }
  f.modal_nav_status = modal_value(nav);
  f.modal_vessel_type = modal_value(types);
  f.duration_s = to_seconds(records.back().timestamp - records.front().timestamp);
  return f;
}

const std::vector<BehaviorPattern>& behavior_taxonomy() {
  static const std::vector<BehaviorPattern> taxonomy = {
      {std::string(patterns::kStationary),
       "speed: below 0.5 kn; course: undefined; heading: held; intent: remain at berth, anchorage "
       "or station; duration: typically long"},
      {std::string(patterns::kPortEntry),
       "speed: decreasing by several knots; course: converging on the harbour approach; heading: "
       "aligning with the fairway; intent: enter port; duration: final approach"},
      {std::string(patterns::kPortExit),
       "speed: increasing by several knots; course: diverging from the harbour; heading: settling "
       "onto the outbound track; intent: leave port; duration: departure leg"},
      {std::string(patterns::kTransit),
       "speed: steady cruising, at least 4 kn; course: nearly straight; heading: stable; intent: "
       "passage between areas; duration: sustained"},
      {std::string(patterns::kManeuver),
       "speed: variable; course: cumulative turning of 45 degrees or more; heading: changing; "
       "intent: alter route, turn or manoeuvre; duration: short to medium"},
      {std::string(patterns::kDrift),
       "speed: low or irregular; course: wandering; heading: unsteady; intent: loiter, fish or wait; "
       "duration: variable"},
  };
  return taxonomy;
}

const BehaviorPattern& behavior_pattern(std::string_view name) {
  for (const auto& p : behavior_taxonomy())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown behavior pattern: " + std::string(name));
}

RuleConfig RuleConfig::parse(std::string_view text) {
  RuleConfig c;
  const std::pair<std::string_view, double RuleConfig::*> keys[] = {
      {"stationary_max_mean_sog_kn", &RuleConfig::stationary_max_mean_sog_kn},
      {"port_speed_delta_kn", &RuleConfig::port_speed_delta_kn},
      {"transit_min_straightness", &RuleConfig::transit_min_straightness},
      {"transit_max_sog_std_kn", &RuleConfig::transit_max_sog_std_kn},
      {"transit_min_mean_sog_kn", &RuleConfig::transit_min_mean_sog_kn},
      {"maneuver_min_course_change_deg", &RuleConfig::maneuver_min_course_change_deg},
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("rule config: expected key = value");
    const auto key = trim(view.substr(0, eq));
    const auto value = to_double(view.substr(eq + 1));
    const auto it = std::find_if(std::begin(keys), std::end(keys),
                                 [&](const auto& k) { return k.first == key; });
    if (it == std::end(keys))
      throw std::invalid_argument("rule config: unknown key '" + std::string(key) + "'");
    if (!value) throw std::invalid_argument("rule config: bad number for '" + std::string(key) + "'");
    c.*(it->second) = *value;
  }
  return c;
}

RuleConfig RuleConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const BehaviorPattern& classify(const SegmentFeatures& f, const RuleConfig& rules) {
  const auto& tax = behavior_taxonomy();
  if (f.mean_sog && *f.mean_sog < rules.stationary_max_mean_sog_kn) return tax[0];
  if (f.end_port && f.end_port->inside() && f.start_sog && f.end_sog &&
      *f.start_sog - *f.end_sog >= rules.port_speed_delta_kn)
    return tax[1];
  if (f.start_port && f.start_port->inside() && f.start_sog && f.end_sog &&
      *f.end_sog - *f.start_sog >= rules.port_speed_delta_kn)
    return tax[2];
  if (f.straightness >= rules.transit_min_straightness && f.sog_std &&
      *f.sog_std <= rules.transit_max_sog_std_kn && *f.mean_sog >= rules.transit_min_mean_sog_kn)
    return tax[3];
  if (f.total_course_change >= rules.maneuver_min_course_change_deg) return tax[4];
  return tax[5];
}

BehaviorPattern RuleBasedAbstractor::abstract(const Segment& seg, const PortDirectory& ports) const {
  return classify(extract_features(seg, ports), rules_);
}

}  // namespace vkg
