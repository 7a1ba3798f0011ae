#include "vkg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace vkg {

std::string_view to_string(Provenance p) { return p == Provenance::raw ? "raw" : "imputed"; }

std::string_view to_string(GuardVerdict v) {
  switch (v) {
    case GuardVerdict::keep: return "keep";
    case GuardVerdict::drop_duplicate: return "duplicate";
    case GuardVerdict::drop_speed: return "implied_speed";
  }
  return "unknown";
}

double Segment::duration_s() const {
  if (records.empty()) return 0.0;
  return to_seconds(records.back().timestamp - records.front().timestamp);
}

double implied_speed_kn(const AisRecord& a, const AisRecord& b) {
  const double d = haversine(a.position(), b.position());
  const double dt = std::abs(to_seconds(b.timestamp - a.timestamp));
  if (dt == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return mps_to_knots(d / dt);
}

GuardVerdict guard_record(const AisRecord& r, const AisRecord* prev, double v_max_kn) {
  if (prev == nullptr) return GuardVerdict::keep;
  if (r.timestamp == prev->timestamp) return GuardVerdict::drop_duplicate;
  if (implied_speed_kn(*prev, r) > v_max_kn) return GuardVerdict::drop_speed;
  return GuardVerdict::keep;
}

AssembleResult assemble(std::vector<AisRecord> records, double v_max_kn) {
  std::map<Mmsi, std::vector<AisRecord>> by_vessel;
  for (auto& r : records) by_vessel[r.vessel_id].push_back(std::move(r));

  AssembleResult out;
  out.trajectories.reserve(by_vessel.size());
  for (auto& [id, recs] : by_vessel) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const AisRecord& a, const AisRecord& b) { return a.timestamp < b.timestamp; });
    Trajectory traj{id, {}};
    traj.records.reserve(recs.size());
    for (auto& r : recs) {
      const AisRecord* prev = traj.records.empty() ? nullptr : &traj.records.back();
      switch (guard_record(r, prev, v_max_kn)) {
        case GuardVerdict::keep: traj.records.push_back(std::move(r)); break;
        case GuardVerdict::drop_duplicate: ++out.dropped_duplicate; break;
        case GuardVerdict::drop_speed: ++out.dropped_speed; break;
      }
    }
    out.kept += traj.records.size();
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

std::string make_segment_id(Mmsi vessel, Timestamp first, Provenance p) {
  const auto ms = first.time_since_epoch().count();
  std::string id = to_string(vessel) + "-" + std::to_string(ms / 1000);
  if (ms % 1000 != 0) id += "." + std::to_string(ms % 1000);
  id += p == Provenance::raw ? "-r" : "-i";
  return id;
}

SegmentationResult segment_trajectory(const Trajectory& traj, double gap_threshold_s,
                                      double max_segment_duration_s) {
  if (!(gap_threshold_s > 0.0) || max_segment_duration_s < gap_threshold_s)
    throw std::invalid_argument("segment: need gap_threshold > 0 and max_duration >= gap_threshold");

  SegmentationResult out;
  const auto& recs = traj.records;
  if (recs.empty()) return out;

  auto open = [&](const AisRecord& r) {
    Segment s;
    s.segment_id = make_segment_id(traj.vessel_id, r.timestamp, Provenance::raw);
    s.vessel_id = traj.vessel_id;
    s.records.push_back(r);
    return s;
  };

  Segment cur = open(recs.front());
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& prev = recs[i - 1];
    const auto& r = recs[i];
    if (to_seconds(r.timestamp - prev.timestamp) > gap_threshold_s) {
      Gap g;
      g.gap_id = to_string(traj.vessel_id) + "-" +
                 std::to_string(prev.timestamp.time_since_epoch().count() / 1000) + "-g";
      g.vessel_id = traj.vessel_id;
      g.before = prev;
      g.after = r;
      out.gaps.push_back(std::move(g));
      out.segments.push_back(std::move(cur));
      cur = open(r);
    } else if (to_seconds(r.timestamp - cur.records.front().timestamp) > max_segment_duration_s) {
      out.segments.push_back(std::move(cur));
      cur = open(r);
    } else {
      cur.records.push_back(r);
    }
  }
  out.segments.push_back(std::move(cur));
  return out;
}

double max_internal_speed_kn(std::span<const AisRecord> records) {
  double best = 0.0;
  for (std::size_t i = 1; i < records.size(); ++i)
    best = std::max(best, implied_speed_kn(records[i - 1], records[i]));
  return best;
}

std::optional<double> median_sampling_interval_s(std::span<const AisRecord> records) {
  if (records.size() < 2) return std::nullopt;
  std::vector<double> dts;
  dts.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i)
    dts.push_back(to_seconds(records[i].timestamp - records[i - 1].timestamp));
  std::sort(dts.begin(), dts.end());
  const auto n = dts.size();
  return n % 2 ? dts[n / 2] : 0.5 * (dts[n / 2 - 1] + dts[n / 2]);
}

}  // namespace vkg
