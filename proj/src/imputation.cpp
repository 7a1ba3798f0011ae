#include "vkg/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vkg {
namespace {

double lerp(double a, double b, double s) { return a + (b - a) * s; }

// Fraction of the gap elapsed at t, in [0, 1].
double gap_fraction(const Gap& gap, Timestamp t) {
  const double total = static_cast<double>((gap.after.timestamp - gap.before.timestamp).count());
  if (total <= 0.0) return 0.0;
  return static_cast<double>((t - gap.before.timestamp).count()) / total;
}

// Interpolated record skeleton: static fields from the earlier boundary,
// speed and course blended when both ends carry them.
AisRecord blend(const Gap& gap, Timestamp t, double s) {
  AisRecord r = gap.before;
  r.timestamp = t;
  r.heading.reset();
  if (gap.before.sog && gap.after.sog) r.sog = lerp(*gap.before.sog, *gap.after.sog, s);
  else r.sog.reset();
  if (gap.before.cog && gap.after.cog)
    r.cog = wrap_360(*gap.before.cog + shortest_arc(*gap.before.cog, *gap.after.cog) * s);
  else r.cog.reset();
  return r;
}

// Longitude of `p` unwrapped to be continuous with `ref`.
double unwrap_lon(double ref, double lon) { return ref + shortest_arc(ref, lon); }

}  // namespace

void MethodRegistry::add(MethodEntry entry) {
  entry.key = canonical_key(entry.key);
  if (entry.key.empty()) throw std::invalid_argument("method key must not be empty");
  if (!entry.fill) throw std::invalid_argument("method " + entry.key + " has no filler");
  const auto key = entry.key;
  if (!entries_.emplace(key, std::move(entry)).second)
    throw std::invalid_argument("method already registered: " + key);
}

const MethodEntry* MethodRegistry::find(std::string_view key) const {
  const auto it = entries_.find(canonical_key(key));
  return it == entries_.end() ? nullptr : &it->second;
}

const MethodEntry& MethodRegistry::at(std::string_view key) const {
  if (const auto* e = find(key)) return *e;
  throw UnknownMethod("method not in registry: " + std::string(key));
}

MethodRef MethodRegistry::ref(std::string_view key) const {
  const auto& e = at(key);
  return {e.key, e.display, e.description};
}

MethodRegistry default_registry() {
  MethodRegistry reg;
  reg.add({std::string(methods::kLinear), "Linear Filler",
           "Straight-line interpolation of latitude and longitude in time; speed and course "
           "blended between the gap endpoints.",
           [](const FillRequest& r) { return linear_fill(r.gap, r.times); }});
  reg.add({std::string(methods::kSmoothCurve), "Smooth Curve Filler",
           "Catmull-Rom cubic through the gap endpoints with end tangents taken from the "
           "neighbouring fixes; suited to curved approaches and turns.",
           [](const FillRequest& r) {
             return smooth_curve_fill(r.gap, r.times, r.before_context, r.after_context);
           }});
  reg.add({std::string(methods::kStationary), "Stationary Filler",
           "Holds the last observed position with zero speed; used for moored or anchored "
           "vessels.",
           [](const FillRequest& r) { return stationary_fill(r.gap, r.times); }});
  return reg;
}

std::vector<Timestamp> resample_times(const Gap& gap, double target_interval_s) {
  if (!(target_interval_s > 0.0)) throw std::invalid_argument("target interval must be positive");
  const auto span_ms = (gap.after.timestamp - gap.before.timestamp).count();
  if (span_ms <= 1) return {};
  const double dt = static_cast<double>(span_ms) / 1000.0;
  long long n = std::llround(dt / target_interval_s) - 1;
  n = std::clamp<long long>(n, 0, span_ms - 1);
  std::vector<Timestamp> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long long i = 1; i <= n; ++i) {
    const double offset = static_cast<double>(span_ms) * static_cast<double>(i) /
                          static_cast<double>(n + 1);
    out.push_back(gap.before.timestamp + Duration{std::llround(offset)});
  }
  return out;
}

std::vector<AisRecord> linear_fill(const Gap& gap, std::span<const Timestamp> times) {
  std::vector<AisRecord> out;
  out.reserve(times.size());
  const double lon2 = unwrap_lon(gap.before.lon, gap.after.lon);
  for (const auto t : times) {
    const double s = gap_fraction(gap, t);
    AisRecord r = blend(gap, t, s);
    r.lat = lerp(gap.before.lat, gap.after.lat, s);
    r.lon = wrap_lon(lerp(gap.before.lon, lon2, s));
    out.push_back(std::move(r));
  }
  return out;
}

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

std::vector<AisRecord> smooth_curve_fill(const Gap& gap, std::span<const Timestamp> times,
                                         const std::optional<AisRecord>& before_context,
                                         const std::optional<AisRecord>& after_context) {
  const double ref = gap.before.lon;
  const LatLon p1{gap.before.lat, ref};
  const LatLon p2{gap.after.lat, unwrap_lon(ref, gap.after.lon)};
  const double span = static_cast<double>((gap.after.timestamp - gap.before.timestamp).count());

  LatLon p0{2.0 * p1.lat - p2.lat, 2.0 * p1.lon - p2.lon};
  if (before_context && before_context->timestamp < gap.before.timestamp) {
    const double lead =
        static_cast<double>((gap.before.timestamp - before_context->timestamp).count());
    const double k = span / lead;
    p0 = {p1.lat - (p1.lat - before_context->lat) * k,
          p1.lon - (p1.lon - unwrap_lon(ref, before_context->lon)) * k};
  }
  LatLon p3{2.0 * p2.lat - p1.lat, 2.0 * p2.lon - p1.lon};
  if (after_context && after_context->timestamp > gap.after.timestamp) {
    const double lag =
        static_cast<double>((after_context->timestamp - gap.after.timestamp).count());
    const double k = span / lag;
    p3 = {p2.lat + (after_context->lat - p2.lat) * k,
          p2.lon + (unwrap_lon(ref, after_context->lon) - p2.lon) * k};
  }

  std::vector<AisRecord> out;
  out.reserve(times.size());
  for (const auto t : times) {
    const double s = gap_fraction(gap, t);
    AisRecord r = blend(gap, t, s);
    r.lat = std::clamp(catmull_rom(p0.lat, p1.lat, p2.lat, p3.lat, s), -90.0, 90.0);
    r.lon = wrap_lon(catmull_rom(p0.lon, p1.lon, p2.lon, p3.lon, s));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AisRecord> stationary_fill(const Gap& gap, std::span<const Timestamp> times) {
  std::vector<AisRecord> out;
  out.reserve(times.size());
  for (const auto t : times) {
    AisRecord r = gap.before;
    r.timestamp = t;
    r.sog = 0.0;
    r.cog.reset();
    r.heading.reset();
    out.push_back(std::move(r));
  }
  return out;
}

Selection estimate_and_select(const KnowledgeGraph& g, const GapContext& ctx) {
  Selection sel;
  try {
    sel.behavior = rank_behaviors(g, ctx.static_attrs, ctx.prev_behavior, 1).front().id;
    sel.evidence = behavior_evidence(g, ctx.static_attrs, ctx.prev_behavior, sel.behavior);
  } catch (const EmptyRanking&) {
    sel.behavior = behavior_node_id(patterns::kTransit);
    sel.behavior_fallback = true;
  }
  try {
    const auto method = rank_methods(g, sel.behavior, 1).front().id;
    sel.method_key = method.key;
    const auto ev = method_evidence(g, sel.behavior, method);
    sel.evidence.insert(sel.evidence.end(), ev.begin(), ev.end());
  } catch (const EmptyRanking&) {
    sel.method_key = std::string(methods::kLinear);
    sel.method_fallback = true;
  }
  return sel;
}

ImputedSegment impute_gap(const KnowledgeGraph& g, const MethodRegistry& registry,
                          const GapContext& ctx, double target_interval_s) {
  return impute_gap_at(g, registry, ctx, resample_times(ctx.gap, target_interval_s));
}

ImputedSegment impute_gap_at(const KnowledgeGraph& g, const MethodRegistry& registry,
                             const GapContext& ctx, std::vector<Timestamp> times) {
  Selection sel = estimate_and_select(g, ctx);
  if (sel.behavior == behavior_node_id(patterns::kStationary) &&
      sel.method_key != methods::kStationary) {
    sel.evidence.push_back({EvidenceRelation::override_rule, sel.behavior,
                            method_node_id(methods::kStationary), 0, 0});
    sel.method_key = std::string(methods::kStationary);
  }
  const auto& method = registry.at(sel.method_key);

  FillRequest req{ctx.gap, std::move(times), ctx.before_context, ctx.after_context};
  auto interior = method.fill(req);
  if (interior.size() != req.times.size())
    throw std::logic_error("filler " + method.key + " returned the wrong number of points");

  ImputedSegment out;
  Segment& seg = out.segment;
  seg.segment_id = make_segment_id(ctx.gap.vessel_id, ctx.gap.before.timestamp, Provenance::imputed);
  seg.vessel_id = ctx.gap.vessel_id;
  seg.provenance = Provenance::imputed;
  seg.behavior_id = sel.behavior;
  seg.method_key = method.key;
  seg.records.reserve(interior.size() + 2);
  seg.records.push_back(ctx.gap.before);
  for (auto& r : interior) seg.records.push_back(std::move(r));
  seg.records.push_back(ctx.gap.after);

  out.gap_id = ctx.gap.gap_id;
  out.method_key = method.key;
  out.estimated_behavior = sel.behavior;
  out.evidence = std::move(sel.evidence);
  out.behavior_fallback = sel.behavior_fallback;
  out.method_fallback = sel.method_fallback;
  out.fallback_used = sel.fallback_used();
  out.static_attrs = ctx.static_attrs;
  out.prev_behavior = ctx.prev_behavior;
  out.next_behavior = ctx.next_behavior;
  return out;
}

MaskedRun mask_interior(std::span<const AisRecord> records) {
  if (records.size() < 5) throw TooShort("masked evaluation needs at least 5 records");
  const auto n = records.size();
  MaskedRun run;
  run.request.gap.gap_id = "masked";
  run.request.gap.vessel_id = records.front().vessel_id;
  run.request.gap.before = records[1];
  run.request.gap.after = records[n - 2];
  run.request.before_context = records[0];
  run.request.after_context = records[n - 1];
  for (std::size_t i = 2; i + 2 < n; ++i) {
    run.request.times.push_back(records[i].timestamp);
    run.truth.push_back(records[i]);
  }
  return run;
}

double mean_error_m(std::span<const AisRecord> filled, std::span<const AisRecord> truth) {
  if (filled.size() != truth.size()) throw std::invalid_argument("mean_error_m: size mismatch");
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    sum += haversine(filled[i].position(), truth[i].position());
  return sum / static_cast<double>(truth.size());
}

BenchmarkResult benchmark(std::span<const AisRecord> records, const MethodRegistry& registry) {
  const auto run = mask_interior(records);
  BenchmarkResult out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [key, entry] : registry.entries()) {
    const double err = mean_error_m(entry.fill(run.request), run.truth);
    out.mean_error_m[key] = err;
    if (err < best || out.best.empty()) {
      if (!std::isnan(err)) best = err;
      out.best = key;
    }
  }
  return out;
}

}  // namespace vkg
