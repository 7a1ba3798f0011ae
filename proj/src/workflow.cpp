#include "vkg/workflow.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "vkg/encoder.hpp"

namespace vkg {

std::string_view to_string(JobPhase p) {
  switch (p) {
    case JobPhase::downloading: return "downloading";
    case JobPhase::ingesting: return "ingesting";
    case JobPhase::building_kg: return "building_kg";
    case JobPhase::imputing: return "imputing";
    case JobPhase::done: return "done";
    case JobPhase::failed: return "failed";
  }
  return "unknown";
}

std::optional<JobPhase> parse_job_phase(std::string_view s) {
  for (auto p : {JobPhase::downloading, JobPhase::ingesting, JobPhase::building_kg,
                 JobPhase::imputing, JobPhase::done, JobPhase::failed})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

void JobConfig::validate() const {
  using namespace std::chrono;
  if (!source.date_from.ok() || !source.date_to.ok())
    throw InvalidJobConfig("source dates are invalid");
  if (sys_days{source.date_from} > sys_days{source.date_to})
    throw InvalidJobConfig("date_from is after date_to");
  if (source.url_template.empty()) throw InvalidJobConfig("source url_template is empty");
  if (source.name.empty() || source.name.find('/') != std::string::npos ||
      source.name.find("..") != std::string::npos)
    throw InvalidJobConfig("source name must be a plain identifier");
  if (!(gap_threshold_s > 0.0)) throw InvalidJobConfig("gap_threshold_s must be positive");
  if (max_segment_duration_s < gap_threshold_s)
    throw InvalidJobConfig("max_segment_duration_s must be at least gap_threshold_s");
  if (target_interval_s && !(*target_interval_s > 0.0))
    throw InvalidJobConfig("target_interval_s must be positive");
  if (!(v_max_kn > 0.0)) throw InvalidJobConfig("v_max_kn must be positive");
  if (worker_count == 0) throw InvalidJobConfig("worker_count must be positive");
  if (source.time_interval) {
    const auto& w = *source.time_interval;
    if (w.start_s < 0 || w.start_s > 86400 || w.end_s < 0 || w.end_s > 86400 || w.start_s == w.end_s)
      throw InvalidJobConfig("time_interval must be a nonempty window within one day");
  }
}

JobTracker::JobTracker(std::string job_id) : phase_start_(std::chrono::steady_clock::now()) {
  status_.job_id = std::move(job_id);
}

void JobTracker::close_phase() {
  const auto now = std::chrono::steady_clock::now();
  status_.phase_seconds[std::string(to_string(status_.phase))] +=
      std::chrono::duration<double>(now - phase_start_).count();
  phase_start_ = now;
}

void JobTracker::enter(JobPhase phase) {
  std::lock_guard lock(mutex_);
  if (status_.phase == JobPhase::failed || status_.phase == JobPhase::done) return;
  if (phase < status_.phase) throw std::logic_error("job phases only move forward");
  if (phase == status_.phase) return;
  close_phase();
  status_.phase = phase;
}

void JobTracker::update(const std::function<void(JobCounters&)>& fn) {
  std::lock_guard lock(mutex_);
  fn(status_.counters);
}

void JobTracker::add_day(DayStatus day) {
  std::lock_guard lock(mutex_);
  status_.days.push_back(std::move(day));
}

void JobTracker::fail(const std::string& error) {
  std::lock_guard lock(mutex_);
  if (status_.phase == JobPhase::failed) return;
  close_phase();
  status_.error = error;
  status_.phase = JobPhase::failed;
}

JobStatus JobTracker::snapshot() const {
  std::lock_guard lock(mutex_);
  return status_;
}

PipelineSettings load_settings(const JobConfig& cfg) {
  PipelineSettings s;
  s.gap_threshold_s = cfg.gap_threshold_s;
  s.max_segment_duration_s = cfg.max_segment_duration_s;
  s.target_interval_s = cfg.target_interval_s;
  s.v_max_kn = cfg.v_max_kn;
  s.worker_count = cfg.worker_count;
  if (cfg.rules_path) s.rules = RuleConfig::load(*cfg.rules_path);
  if (cfg.ports_path) s.ports = PortDirectory::load(*cfg.ports_path);
  return s;
}

namespace {

// Runs fn(i) for i in [0, n) on `workers` threads; fn(i, worker_index).
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](unsigned w) {
    try {
      for (std::size_t i = next++; i < n; i = next++) fn(i, w);
    } catch (...) {
      errors[w] = std::current_exception();
      next = n;
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(body, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void sort_by_vessel(std::vector<Trajectory>& trajectories) {
  std::sort(trajectories.begin(), trajectories.end(),
            [](const Trajectory& a, const Trajectory& b) { return a.vessel_id < b.vessel_id; });
}

double target_interval_for(const Trajectory& t, const PipelineSettings& s) {
  if (s.target_interval_s) return *s.target_interval_s;
  const auto median = median_sampling_interval_s(t.records);
  return median && *median > 0.0 ? *median : 60.0;
}

}  // namespace

VesselAnalysis analyze_vessel(const Trajectory& traj, const PipelineSettings& s,
                              const BehaviorAbstractor& abstractor) {
  VesselAnalysis v;
  v.trajectory = traj;
  auto split = segment_trajectory(traj, s.gap_threshold_s, s.max_segment_duration_s);
  v.segments = std::move(split.segments);
  v.gaps = std::move(split.gaps);
  v.segment_attrs.resize(v.segments.size());
  v.features.resize(v.segments.size());
  v.behaviors.resize(v.segments.size());
  for (std::size_t i = 0; i < v.segments.size(); ++i) {
    auto& seg = v.segments[i];
    v.segment_attrs[i] = encode_static_attrs(seg.records, s.ports);
    if (!seg.eligible()) continue;
    v.features[i] = extract_features(seg, s.ports);
    if (max_internal_speed_kn(seg.records) > s.v_max_kn) {
      ++v.speed_flagged;
      continue;
    }
    try {
      auto pattern = abstractor.abstract(seg, s.ports);
      seg.behavior_id = behavior_node_id(pattern.name);
      v.behaviors[i] = std::move(pattern);
    } catch (const AbstractionFailure&) {
      ++v.abstraction_failures;
    }
  }
  return v;
}

IngestResult assemble_records(std::vector<AisRecord> records, const JobConfig& cfg,
                              JobTracker& tracker) {
  const auto parsed = records.size();
  std::uint64_t outside_window = 0;
  if (cfg.source.time_interval) {
    records = filter_time_window(std::move(records), *cfg.source.time_interval);
    outside_window = parsed - records.size();
  }
  auto assembled = assemble(std::move(records), cfg.v_max_kn);
  tracker.update([&](JobCounters& c) {
    c.records_kept += assembled.kept;
    c.records_dropped["time_window"] += outside_window;
    c.records_dropped["duplicate"] += assembled.dropped_duplicate;
    c.records_dropped["implied_speed"] += assembled.dropped_speed;
    c.trajectories = std::max<std::uint64_t>(c.trajectories, assembled.trajectories.size());
  });
  return {std::move(assembled.trajectories)};
}

IngestResult ingest(const JobConfig& cfg, JobTracker& tracker) {
  tracker.enter(JobPhase::downloading);
  std::vector<SourceEntry> entries;
  try {
    entries = resolve(cfg.source);
  } catch (const std::invalid_argument& e) {
    throw JobFailed(JobPhase::downloading, e.what());
  }

  const auto cache_dir = cfg.source.cache_dir.is_relative() ? cfg.data_dir / cfg.source.cache_dir
                                                          : cfg.source.cache_dir;
  std::vector<std::optional<std::filesystem::path>> files(entries.size());
  std::vector<DayStatus> days(entries.size());
  parallel_for(entries.size(), cfg.worker_count, [&](std::size_t i, unsigned) {
    days[i].date = entries[i].date;
    try {
      files[i] = fetch(entries[i], cache_dir, cfg.source.name);
      days[i].ok = true;
      days[i].detail = files[i]->string();
    } catch (const std::exception& e) {
      days[i].detail = e.what();
    }
  });
  for (auto& d : days) tracker.add_day(d);
  if (!entries.empty() && std::none_of(days.begin(), days.end(), [](const DayStatus& d) { return d.ok; }))
    throw JobFailed(JobPhase::downloading, "no day could be fetched: " + days.front().detail);

  tracker.enter(JobPhase::ingesting);
  ColumnMapping mapping = default_column_mapping();
  try {
    if (cfg.column_mapping_path) mapping = load_column_mapping(*cfg.column_mapping_path);
  } catch (const std::exception& e) {
    throw JobFailed(JobPhase::ingesting, e.what());
  }

  std::vector<AisRecord> records;
  ParseStats stats;
  for (const auto& f : files) {
    if (!f) continue;
    auto part = read_records(*f, mapping, stats);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  tracker.update([&](JobCounters& c) {
    c.records_parsed += stats.parsed;
    for (int r = 0; r < 5; ++r)
      if (stats.failed_by_reason[r])
        c.parse_failures[std::string(to_string(static_cast<ParseFailureReason>(r)))] +=
            stats.failed_by_reason[r];
  });
  return assemble_records(std::move(records), cfg, tracker);
}

ConstructionResult build_knowledge(std::vector<Trajectory> trajectories, const PipelineSettings& s,
                                   const MethodRegistry& registry, JobTracker& tracker,
                                   const BehaviorAbstractor* abstractor) {
  sort_by_vessel(trajectories);
  const RuleBasedAbstractor default_abstractor(s.rules);
  const BehaviorAbstractor& abs = abstractor ? *abstractor : default_abstractor;

  ConstructionResult out;
  out.vessels.resize(trajectories.size());
  const unsigned workers = std::max(1u, s.worker_count);
  std::vector<KnowledgeGraph> partial(workers);

  parallel_for(trajectories.size(), workers, [&](std::size_t i, unsigned w) {
    VesselAnalysis v = analyze_vessel(trajectories[i], s, abs);
    std::uint64_t observed = 0, benchmarked = 0;
    for (std::size_t k = 0; k < v.segments.size(); ++k) {
      if (!v.behaviors[k]) continue;
      Observation obs;
      obs.static_attrs = v.segment_attrs[k];
      obs.behavior = *v.behaviors[k];
      if (v.segments[k].records.size() >= 5) {
        obs.best_method = registry.ref(benchmark(v.segments[k].records, registry).best);
        ++benchmarked;
      }
      if (k > 0 && v.behaviors[k - 1]) obs.prev_behavior = v.behaviors[k - 1];
      partial[w].observe(obs);
      ++observed;
    }
    tracker.update([&](JobCounters& c) {
      c.segments += v.segments.size();
      c.gaps += v.gaps.size();
      c.segments_observed += observed;
      c.segments_benchmarked += benchmarked;
      c.segments_speed_flagged += v.speed_flagged;
      c.abstraction_failures += v.abstraction_failures;
    });
    out.vessels[i] = std::move(v);
  });

  for (const auto& g : partial) out.graph.merge(g);
  tracker.update([&](JobCounters& c) {
    c.trajectories = std::max<std::uint64_t>(c.trajectories, trajectories.size());
  });
  return out;
}

ConstructionOutput run_construction(const JobConfig& cfg, const MethodRegistry& registry) {
  JobTracker tracker("construction");
  ConstructionOutput out;
  try {
    cfg.validate();
    const auto settings = load_settings(cfg);
    auto ingested = ingest(cfg, tracker);
    tracker.enter(JobPhase::building_kg);
    auto built = build_knowledge(ingested.trajectories, settings, registry, tracker);
    tracker.enter(JobPhase::done);
    out.graph = std::move(built.graph);
    out.vessels = std::move(built.vessels);
    out.trajectories = std::move(ingested.trajectories);
  } catch (const JobFailed& e) {
    tracker.fail(e.what());
    throw;
  } catch (const std::exception& e) {
    const auto phase = tracker.snapshot().phase;
    tracker.fail(e.what());
    throw JobFailed(phase, e.what());
  }
  out.status = tracker.snapshot();
  return out;
}

GapContext gap_context(const VesselAnalysis& v, std::size_t gap_index, const PortDirectory& ports) {
  const Gap& gap = v.gaps.at(gap_index);
  GapContext ctx;
  ctx.gap = gap;
  ctx.static_attrs = encode_gap_attrs(gap, ports);
  for (const auto& seg : v.segments) {
    if (seg.records.back().timestamp == gap.before.timestamp) {
      ctx.prev_behavior = seg.behavior_id;
      if (seg.records.size() >= 2) ctx.before_context = seg.records[seg.records.size() - 2];
    }
    if (seg.records.front().timestamp == gap.after.timestamp) {
      ctx.next_behavior = seg.behavior_id;
      if (seg.records.size() >= 2) ctx.after_context = seg.records[1];
    }
  }
  return ctx;
}

ImputationResult run_imputation(const KnowledgeGraph& g, std::vector<Trajectory> trajectories,
                                const PipelineSettings& s, const MethodRegistry& registry,
                                JobTracker& tracker, const BehaviorAbstractor* abstractor) {
  sort_by_vessel(trajectories);
  const RuleBasedAbstractor default_abstractor(s.rules);
  const BehaviorAbstractor& abs = abstractor ? *abstractor : default_abstractor;

  ImputationResult out;
  out.vessels.resize(trajectories.size());
  std::vector<std::vector<ImputedSegment>> per_vessel(trajectories.size());
  parallel_for(trajectories.size(), std::max(1u, s.worker_count), [&](std::size_t i, unsigned) {
    VesselAnalysis v = analyze_vessel(trajectories[i], s, abs);
    const double interval = target_interval_for(v.trajectory, s);
    std::uint64_t fallbacks = 0;
    for (std::size_t k = 0; k < v.gaps.size(); ++k) {
      auto imp = impute_gap(g, registry, gap_context(v, k, s.ports), interval);
      if (imp.fallback_used) ++fallbacks;
      per_vessel[i].push_back(std::move(imp));
    }
    tracker.update([&](JobCounters& c) {
      c.imputed_segments += per_vessel[i].size();
      c.fallbacks += fallbacks;
    });
    out.vessels[i] = std::move(v);
  });
  std::uint64_t segments = 0, gaps = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    segments += out.vessels[i].segments.size();
    gaps += out.vessels[i].gaps.size();
    for (auto& imp : per_vessel[i]) out.imputed.push_back(std::move(imp));
  }
  tracker.update([&](JobCounters& c) {
    c.trajectories = std::max<std::uint64_t>(c.trajectories, trajectories.size());
    c.segments = std::max(c.segments, segments);
    c.gaps = std::max(c.gaps, gaps);
  });
  return out;
}

std::vector<Segment> interleave(const VesselAnalysis& v, const std::vector<ImputedSegment>& imputed) {
  std::vector<Segment> out = v.segments;
  for (const auto& imp : imputed)
    if (imp.segment.vessel_id == v.trajectory.vessel_id) out.push_back(imp.segment);
  std::stable_sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) {
    const auto ta = a.records.front().timestamp;
    const auto tb = b.records.front().timestamp;
    if (ta != tb) return ta < tb;
    return a.provenance < b.provenance;
  });
  return out;
}

std::map<std::string, SegmentReport> compose_reports(const KnowledgeGraph& g,
                                                     const std::vector<VesselAnalysis>& vessels,
                                                     const std::vector<ImputedSegment>& imputed) {
  std::map<std::string, SegmentReport> reports;
  std::map<std::string, const ImputedSegment*> imputed_by_id;
  for (const auto& imp : imputed) imputed_by_id[imp.segment.segment_id] = &imp;

  for (const auto& v : vessels) {
    std::map<std::string, std::size_t> raw_index;
    for (std::size_t i = 0; i < v.segments.size(); ++i) raw_index[v.segments[i].segment_id] = i;
    const auto timeline = interleave(v, imputed);
    for (std::size_t t = 0; t < timeline.size(); ++t) {
      const auto& seg = timeline[t];
      if (seg.provenance == Provenance::imputed) {
        reports[seg.segment_id] = compose(*imputed_by_id.at(seg.segment_id), g);
        continue;
      }
      const auto i = raw_index.at(seg.segment_id);
      RawSegmentContext ctx{seg, v.segment_attrs[i], v.features[i], std::nullopt, std::nullopt};
      if (t > 0) ctx.prev_behavior = timeline[t - 1].behavior_id;
      if (t + 1 < timeline.size()) ctx.next_behavior = timeline[t + 1].behavior_id;
      try {
        reports[seg.segment_id] = compose(ctx, g);
      } catch (const UnknownNode&) {
        const auto missing = ctx.segment.behavior_id;
        ctx.segment.behavior_id.reset();
        auto r = compose(ctx, g);
        r.explanation.cues.insert(r.explanation.cues.begin(),
                                  "behavior " + to_string(*missing) + " is not present in the SD-KG");
        reports[seg.segment_id] = std::move(r);
      }
    }
  }
  return reports;
}

JobOutput run_full_job(const JobConfig& cfg, const MethodRegistry& registry, JobTracker& tracker) {
  JobOutput out;
  try {
    cfg.validate();
    const auto settings = load_settings(cfg);
    auto ingested = ingest(cfg, tracker);
    tracker.enter(JobPhase::building_kg);
    auto built = build_knowledge(ingested.trajectories, settings, registry, tracker);
    tracker.enter(JobPhase::imputing);
    auto imputed = run_imputation(built.graph, ingested.trajectories, settings, registry, tracker);
    out.reports = compose_reports(built.graph, imputed.vessels, imputed.imputed);
    out.trajectories = std::move(ingested.trajectories);
    std::sort(out.trajectories.begin(), out.trajectories.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.vessel_id < b.vessel_id; });
    out.vessels = std::move(imputed.vessels);
    out.graph = std::move(built.graph);
    out.imputed = std::move(imputed.imputed);
  } catch (const JobFailed& e) {
    tracker.fail(e.what());
    throw;
  } catch (const std::exception& e) {
    const auto phase = tracker.snapshot().phase;
    tracker.fail(e.what());
    throw JobFailed(phase, e.what());
  }
  return out;
}

EvalReport evaluate(const KnowledgeGraph& g, std::vector<Trajectory> trajectories,
                    const PipelineSettings& s, const MethodRegistry& registry) {
  sort_by_vessel(trajectories);
  const RuleBasedAbstractor abstractor(s.rules);
  struct Acc {
    std::uint64_t n = 0;
    double sum = 0.0;
  };
  std::map<std::string, Acc> per_method, per_selected, per_behavior;
  EvalReport report;

  for (const auto& traj : trajectories) {
    const auto v = analyze_vessel(traj, s, abstractor);
    for (std::size_t k = 0; k < v.segments.size(); ++k) {
      const auto& seg = v.segments[k];
      if (!v.behaviors[k] || seg.records.size() < 5) continue;
      ++report.segments;
      const auto run = mask_interior(seg.records);
      for (const auto& [key, entry] : registry.entries()) {
        auto& a = per_method[key];
        a.sum += mean_error_m(entry.fill(run.request), run.truth);
        ++a.n;
      }
      GapContext ctx;
      ctx.gap = run.request.gap;
      ctx.gap.gap_id = seg.segment_id + "-masked";
      ctx.static_attrs = encode_gap_attrs(ctx.gap, s.ports);
      if (k > 0) ctx.prev_behavior = v.segments[k - 1].behavior_id;
      if (k + 1 < v.segments.size()) ctx.next_behavior = v.segments[k + 1].behavior_id;
      ctx.before_context = run.request.before_context;
      ctx.after_context = run.request.after_context;
      const auto imp = impute_gap_at(g, registry, ctx, run.request.times);
      if (imp.fallback_used) ++report.fallbacks;
      const std::span<const AisRecord> filled(imp.segment.records.data() + 1,
                                              imp.segment.records.size() - 2);
      const double err = mean_error_m(filled, run.truth);
      auto& sel = per_selected[imp.method_key];
      sel.sum += err;
      ++sel.n;
      auto& beh = per_behavior[v.behaviors[k]->name];
      beh.sum += err;
      ++beh.n;
    }
  }
  auto rows = [](const std::map<std::string, Acc>& m) {
    std::vector<EvalRow> out;
    for (const auto& [label, a] : m)
      out.push_back({label, a.n, a.n ? a.sum / static_cast<double>(a.n) : 0.0});
    return out;
  };
  report.per_method = rows(per_method);
  report.per_selected_method = rows(per_selected);
  report.per_behavior = rows(per_behavior);
  return report;
}

}  // namespace vkg
