#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "vkg/documents.hpp"
#include "vkg/imputation.hpp"
#include "vkg/store.hpp"

namespace httplib {
class Server;
}

namespace vkg {

inline constexpr std::string_view kApiPrefix = "/api/v1";

struct ApiRequest {
  std::string method = "GET";
  std::string path;  // includes the /api/v1 prefix
  std::multimap<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  Json body;  // always carries schema_version
};

/// Trajectory summary returned by list_trajectories.
struct TrajectorySummary {
  Mmsi vessel_id;
  Timestamp start;
  Timestamp end;
  std::size_t record_count = 0;
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
  std::string vessel_type;
};

struct TrajectoryFilter {
  std::optional<Mmsi> mmsi;
  std::optional<Timestamp> time_from;
  std::optional<Timestamp> time_to;
  struct Box {
    double min_lon, min_lat, max_lon, max_lat;
  };
  std::optional<Box> bbox;
};

/// mmsi equality, [start, end] overlapping [time_from, time_to], and any
/// record inside the (inclusive) box.
bool matches(const Trajectory& t, const TrajectoryFilter& f);

struct ServiceOptions {
  std::filesystem::path data_dir = "vkg-data";
  std::string cors_origin = "*";
};

/// Request dispatcher over an immutable, atomically swapped snapshot, plus
/// the single background job slot.
class Service {
 public:
  explicit Service(ServiceOptions opts, MethodRegistry registry = default_registry());
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Reads the data directory (missing files load empty).
  void load();
  void publish(Snapshot s);
  std::shared_ptr<const Snapshot> snapshot() const;

  ApiResponse handle(const ApiRequest& req);

  /// Throws InvalidJobConfig; returns nullopt when a job is already running.
  std::optional<std::string> submit_job(JobConfig cfg);
  std::optional<JobStatus> job_status(const std::string& id) const;
  /// Blocks until the background job (if any) has finished.
  void wait_for_job();

  const ServiceOptions& options() const { return opts_; }

 private:
  struct Serving;

  ApiResponse dispatch(const ApiRequest& req);
  void run_job(std::string id, JobConfig cfg, std::shared_ptr<JobTracker> tracker);

  ServiceOptions opts_;
  MethodRegistry registry_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Serving> serving_;

  mutable std::mutex job_mutex_;
  std::map<std::string, std::shared_ptr<JobTracker>> live_jobs_;
  std::map<std::string, JobStatus> finished_jobs_;
  bool job_running_ = false;
  std::uint64_t job_seq_ = 0;
  std::thread worker_;
};

/// Routes every /api/v1 request of `server` to `service`, with CORS headers.
void mount(httplib::Server& server, Service& service);

struct ListenOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Host and port from VKG_HOST / VKG_PORT, falling back to `defaults`.
ListenOptions listen_options_from_env(ListenOptions defaults = {});

}  // namespace vkg
