// Command-line driver: each command composes library operations and
// persists through the store.

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "vkg/archive.hpp"
#include "vkg/documents.hpp"
#include "vkg/service.hpp"
#include "vkg/store.hpp"
#include "vkg/workflow.hpp"

namespace fs = std::filesystem;
using namespace vkg;

namespace {

// Exit codes, one per failure class (see docs/cli.md).
enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kBadConfig = 3,
  kBadData = 4,
  kJobFailed = 5,
  kNotFound = 6,
  kServe = 7,
};

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  bool structured = false;

  void result(const std::string& command, Json body, const std::string& text) const {
    if (structured) {
      body["schema_version"] = kSchemaVersion;
      body["command"] = command;
      std::cout << body.dump() << '\n';
    } else {
      std::cout << text;
    }
  }

  int error(int code, const std::string& kind, const std::string& message) const {
    if (structured) {
      std::cout << Json{{"schema_version", kSchemaVersion},
                        {"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}}
                       .dump()
                << '\n';
    } else {
      std::cerr << "vkg: " << kind << ": " << message << '\n';
    }
    return code;
  }
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Overrides {
  std::string rules;
  std::string ports;
  unsigned workers = 0;
};

// Settings for commands that work on an existing data directory: the config
// saved by ingest when present, then command-line overrides.
PipelineSettings settings_for(const fs::path& data_dir, const Overrides& o) {
  JobConfig cfg{};
  if (auto saved = load_saved_job_config(data_dir)) cfg = *saved;
  if (!o.rules.empty()) cfg.rules_path = o.rules;
  if (!o.ports.empty()) cfg.ports_path = o.ports;
  if (o.workers) cfg.worker_count = o.workers;
  return load_settings(cfg);
}

std::string node_summary(const KnowledgeGraph& g) {
  std::size_t edges = g.edges().size();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu nodes (%zu static, %zu behavior, %zu method), %zu edges, %zu transitions\n",
                g.nodes().size(), g.count_nodes(NodeKind::static_attr),
                g.count_nodes(NodeKind::behavior), g.count_nodes(NodeKind::method), edges,
                g.transitions().size());
  return buf;
}

Json graph_counts(const KnowledgeGraph& g) {
  return Json{{"nodes", g.nodes().size()},
              {"static_nodes", g.count_nodes(NodeKind::static_attr)},
              {"behavior_nodes", g.count_nodes(NodeKind::behavior)},
              {"method_nodes", g.count_nodes(NodeKind::method)},
              {"edges", g.edges().size()},
              {"transitions", g.transitions().size()}};
}

std::string status_text(const JobStatus& s) {
  const auto& c = s.counters;
  std::string out = "job " + s.job_id + ": " + std::string(to_string(s.phase)) + "\n";
  for (const auto& d : s.days)
    out += "  day " + format_date(d.date) + (d.ok ? " ok" : " FAILED: " + d.detail) + "\n";
  out += "  records parsed " + std::to_string(c.records_parsed) + ", kept " +
         std::to_string(c.records_kept) + "\n";
  for (const auto& [reason, n] : c.parse_failures)
    out += "  parse failures (" + reason + "): " + std::to_string(n) + "\n";
  for (const auto& [reason, n] : c.records_dropped)
    out += "  dropped (" + reason + "): " + std::to_string(n) + "\n";
  out += "  trajectories " + std::to_string(c.trajectories) + ", segments " +
         std::to_string(c.segments) + ", gaps " + std::to_string(c.gaps) + ", imputed " +
         std::to_string(c.imputed_segments) + ", fallbacks " + std::to_string(c.fallbacks) + "\n";
  return out;
}

// Pads to `width` code points so labels with non-ASCII dashes still align.
std::string pad_right(const std::string& s, std::size_t width) {
  std::size_t points = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++points;
  return points >= width ? s : s + std::string(width - points, ' ');
}

JobConfig read_config(const std::string& path) {
  if (path.empty()) throw InvalidJobConfig("no job config given (--config or VKG_CONFIG)");
  return load_job_config(path);
}

StaticAttr parse_attr(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("--attr", "expected class=value");
  const auto cls = parse_attr_class(text.substr(0, eq));
  if (!cls)
    throw CLI::ValidationError("--attr", "class must be vessel_type, nav_status or spatial_context");
  return {*cls, text.substr(eq + 1)};
}

int run(int argc, char** argv) {
  CLI::App app{"Vessel trajectory knowledge graph: ingest, build, impute, evaluate, serve."};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));

  std::string config_path = env_or("VKG_CONFIG", "");
  std::string data_dir = env_or("VKG_DATA_DIR", "");
  std::string kg_path;
  Overrides over;

  auto* ingest_cmd = app.add_subcommand("ingest", "Fetch and clean AIS data into the data directory");
  ingest_cmd->add_option("--config", config_path, "Job config file (env VKG_CONFIG)");
  ingest_cmd->add_option("--data", data_dir, "Override the config's data directory");

  auto* run_cmd = app.add_subcommand("run", "Full job: ingest, build the SD-KG, impute, write reports");
  run_cmd->add_option("--config", config_path, "Job config file (env VKG_CONFIG)");
  run_cmd->add_option("--data", data_dir, "Override the config's data directory");

  auto add_settings = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "Data directory (env VKG_DATA_DIR)");
    cmd->add_option("--rules", over.rules, "Behavior rule config");
    cmd->add_option("--ports", over.ports, "Port directory CSV");
    cmd->add_option("--workers", over.workers, "Worker threads")->check(CLI::Range(1, 1024));
  };
  auto* build_cmd = app.add_subcommand("build-kg", "Build the SD-KG from cleaned trajectories");
  add_settings(build_cmd);
  build_cmd->add_option("--out", kg_path, "Graph file (default <data>/sdkg.json)");

  auto* impute_cmd = app.add_subcommand("impute", "Impute every gap against an SD-KG");
  add_settings(impute_cmd);
  impute_cmd->add_option("--kg", kg_path, "Graph file (default <data>/sdkg.json)");

  auto* eval_cmd = app.add_subcommand("eval", "Masked-gap evaluation of the imputation pipeline");
  add_settings(eval_cmd);
  eval_cmd->add_option("--kg", kg_path, "Graph file (default <data>/sdkg.json)");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the query API over HTTP");
  ListenOptions listen;
  try {
    listen = listen_options_from_env();
  } catch (const std::exception& e) {
    std::cerr << "vkg: " << e.what() << '\n';
    return kBadConfig;
  }
  std::string cors = env_or("VKG_CORS_ORIGIN", "*");
  serve_cmd->add_option("--data", data_dir, "Data directory (env VKG_DATA_DIR)");
  serve_cmd->add_option("--host", listen.host, "Bind address (env VKG_HOST)");
  serve_cmd->add_option("--port", listen.port, "Port (env VKG_PORT)")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--cors-origin", cors, "Allowed browser origin (env VKG_CORS_ORIGIN)");

  auto* kg_cmd = app.add_subcommand("kg", "Inspect an SD-KG");
  kg_cmd->require_subcommand(1);
  auto* top_cmd = kg_cmd->add_subcommand("top", "Rank behaviors for static attributes");
  std::vector<std::string> attrs;
  std::string prev;
  std::size_t k = 5;
  auto add_graph = [&](CLI::App* cmd) {
    cmd->add_option("--kg", kg_path, "Graph file (default <data>/sdkg.json)");
    cmd->add_option("--data", data_dir, "Data directory (env VKG_DATA_DIR)");
  };
  add_graph(top_cmd);
  top_cmd->add_option("--attr", attrs, "class=value, e.g. vessel_type=Cargo (repeatable)")->required();
  top_cmd->add_option("--prev", prev, "Previous behavior name");
  top_cmd->add_option("-k", k, "How many behaviors")->check(CLI::PositiveNumber);
  auto* node_cmd = kg_cmd->add_subcommand("node", "Show one node's report");
  std::string node_id;
  add_graph(node_cmd);
  node_cmd->add_option("--id", node_id, "Node id, e.g. \"behavior/port-entry: decelerate–align\"")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  const Output out{format == "structured"};
  auto data_path = [&]() -> fs::path {
    if (data_dir.empty()) throw InvalidJobConfig("no data directory given (--data or VKG_DATA_DIR)");
    if (!fs::is_directory(data_dir)) throw MissingInput("data directory " + data_dir + " does not exist");
    return data_dir;
  };
  auto graph_path = [&]() -> fs::path {
    if (kg_path.empty()) return data_path() / store_files::kGraph;
    if (!fs::is_regular_file(kg_path)) throw MissingInput("graph file " + kg_path + " does not exist");
    return kg_path;
  };

  try {
    if (*ingest_cmd || *run_cmd) {
      JobConfig cfg = read_config(config_path);
      if (!data_dir.empty()) cfg.data_dir = data_dir;
      cfg.data_dir = fs::absolute(cfg.data_dir);
      JobTracker tracker(*run_cmd ? "run" : "ingest");
      if (*ingest_cmd) {
        IngestResult ingested;
        try {
          cfg.validate();
          ingested = ingest(cfg, tracker);
        } catch (const JobFailed& e) {
          tracker.fail(e.what());
          append_job(cfg.data_dir, tracker.snapshot());
          throw;
        }
        save_trajectories(cfg.data_dir, ingested.trajectories);
        save_job_config(cfg.data_dir, cfg);
        tracker.enter(JobPhase::done);
        const auto status = tracker.snapshot();
        append_job(cfg.data_dir, status);
        out.result("ingest", {{"job", status}, {"data_dir", cfg.data_dir.string()}}, status_text(status));
        return kOk;
      }
      JobOutput result;
      try {
        result = run_full_job(cfg, default_registry(), tracker);
      } catch (const JobFailed&) {
        append_job(cfg.data_dir, tracker.snapshot());
        throw;
      }
      Snapshot snap = make_snapshot(std::move(result));
      snap.jobs = load_snapshot(cfg.data_dir).jobs;
      tracker.enter(JobPhase::done);
      snap.jobs.push_back(tracker.snapshot());
      save_snapshot(cfg.data_dir, snap);
      save_job_config(cfg.data_dir, cfg);
      const auto status = tracker.snapshot();
      out.result("run", {{"job", status}, {"graph", graph_counts(snap.graph)}},
                 status_text(status) + node_summary(snap.graph));
      return kOk;
    }

    if (*build_cmd) {
      const auto dir = data_path();
      const auto settings = settings_for(dir, over);
      JobTracker tracker("build-kg");
      auto built = build_knowledge(load_trajectories(dir), settings, default_registry(), tracker);
      const fs::path out_file = kg_path.empty() ? dir / store_files::kGraph : fs::path(kg_path);
      save_graph_file(out_file, built.graph);
      std::vector<Segment> segments;
      std::vector<Gap> gaps;
      for (const auto& v : built.vessels) {
        segments.insert(segments.end(), v.segments.begin(), v.segments.end());
        gaps.insert(gaps.end(), v.gaps.begin(), v.gaps.end());
      }
      save_segments(dir, segments, gaps);
      const auto& c = tracker.snapshot().counters;
      Json body = graph_counts(built.graph);
      body["graph_file"] = out_file.string();
      body["segments_observed"] = c.segments_observed;
      body["segments_benchmarked"] = c.segments_benchmarked;
      out.result("build-kg", body, node_summary(built.graph));
      return kOk;
    }

    if (*impute_cmd) {
      const auto dir = data_path();
      const auto settings = settings_for(dir, over);
      const auto g = load_graph_file(graph_path());
      JobTracker tracker("impute");
      const auto registry = default_registry();
      auto imputed = run_imputation(g, load_trajectories(dir), settings, registry, tracker);
      const auto reports = compose_reports(g, imputed.vessels, imputed.imputed);
      std::vector<Segment> segments;
      std::vector<Gap> gaps;
      for (const auto& v : imputed.vessels) {
        segments.insert(segments.end(), v.segments.begin(), v.segments.end());
        gaps.insert(gaps.end(), v.gaps.begin(), v.gaps.end());
      }
      save_segments(dir, segments, gaps);
      save_imputed(dir, imputed.imputed);
      save_reports(dir, reports);
      if (graph_path() != dir / store_files::kGraph) save_graph_file(dir / store_files::kGraph, g);
      const auto c = tracker.snapshot().counters;
      out.result("impute",
                 {{"gaps", gaps.size()}, {"imputed_segments", c.imputed_segments}, {"fallbacks", c.fallbacks}},
                 std::to_string(gaps.size()) + " gaps, " + std::to_string(c.imputed_segments) +
                     " imputed segments, " + std::to_string(c.fallbacks) + " fallbacks\n");
      return kOk;
    }

    if (*eval_cmd) {
      const auto dir = data_path();
      const auto settings = settings_for(dir, over);
      const auto g = load_graph_file(graph_path());
      const auto report = evaluate(g, load_trajectories(dir), settings, default_registry());
      std::string text = "masked segments: " + std::to_string(report.segments) +
                         ", pipeline fallbacks: " + std::to_string(report.fallbacks) + "\n";
      auto table = [&](const char* title, const std::vector<EvalRow>& rows) {
        text += std::string("\n") + title + "\n";
        char buf[512];
        std::snprintf(buf, sizeof buf, "  %-40s %8s %16s\n", "label", "n", "mean_error_m");
        text += buf;
        for (const auto& r : rows) {
          std::snprintf(buf, sizeof buf, " %8llu %16.3f\n", static_cast<unsigned long long>(r.n),
                        r.mean_error_m);
          text += "  " + pad_right(r.label, 40) + buf;
        }
      };
      table("per method (every filler on every masked segment)", report.per_method);
      table("per selected method (pipeline choice)", report.per_selected_method);
      table("per behavior (pipeline choice)", report.per_behavior);
      out.result("eval", report, text);
      return kOk;
    }

    if (*serve_cmd) {
      Service service({data_path(), cors});
      service.load();
      httplib::Server server;
      mount(server, service);
      if (!server.bind_to_port(listen.host, listen.port))
        return out.error(kServe, "serve", "cannot bind " + listen.host + ":" + std::to_string(listen.port));
      std::cerr << "vkg: serving " << data_dir << " on http://" << listen.host << ":" << listen.port
                << kApiPrefix << '\n';
      server.listen_after_bind();
      return kOk;
    }

    if (*kg_cmd) {
      const auto g = load_graph_file(graph_path());
      if (*top_cmd) {
        std::vector<StaticAttr> parsed;
        for (const auto& a : attrs) parsed.push_back(parse_attr(a));
        std::optional<NodeId> prev_id;
        if (!prev.empty()) prev_id = behavior_node_id(prev);
        Json items = Json::array();
        std::string text;
        try {
          for (const auto& r : rank_behaviors(g, parsed, prev_id, k)) {
            const auto& node = g.at(r.id);
            items.push_back({{"id", r.id}, {"display", node.display}, {"score", r.score}});
            char buf[64];
            std::snprintf(buf, sizeof buf, "%8.4f  ", r.score);
            text += buf + node.display + "\n";
          }
        } catch (const EmptyRanking&) {
          text = "no behavior has evidence for these attributes\n";
        }
        out.result("kg top", {{"behaviors", items}}, text);
        return kOk;
      }
      const auto id = parse_node_id(node_id);
      if (!id) return out.error(kUsage, "usage", "malformed node id '" + node_id + "'");
      if (!g.contains(*id)) return out.error(kNotFound, "not_found", "unknown node " + node_id);
      const auto report = report_for_node(*id, g);
      std::string text = report.node.display + " [" + to_string(report.node.id) + "], count " +
                         std::to_string(report.node.count) + "\n";
      for (const auto& line : report.summary) text += "  " + line + "\n";
      for (const auto& n : report.neighbors)
        text += "  - " + n.display + ": " + std::to_string(n.weight) + " of " + std::to_string(n.total) +
                " (" + format_share(n.weight, n.total) + "%)\n";
      out.result("kg node", {{"report", report}}, text);
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    return out.error(kUsage, "usage", e.what());
  } catch (const InvalidJobConfig& e) {
    return out.error(kBadConfig, "invalid_config", e.what());
  } catch (const JobFailed& e) {
    return out.error(kJobFailed, "job_failed", e.what());
  } catch (const MissingInput& e) {
    return out.error(kNotFound, "not_found", e.what());
  } catch (const DocumentError& e) {
    return out.error(kBadData, "bad_data", e.what());
  } catch (const SchemaError& e) {
    return out.error(kBadData, "bad_data", e.what());
  } catch (const ArchiveError& e) {
    return out.error(kBadData, "bad_data", e.what());
  } catch (const std::invalid_argument& e) {
    return out.error(kBadConfig, "invalid_config", e.what());
  } catch (const std::exception& e) {
    return out.error(kInternal, "internal", e.what());
  }
  return kInternal;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
