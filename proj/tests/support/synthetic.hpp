#pragma once

// Deterministic synthetic inputs shared by the unit tests and the acceptance
// suite.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vkg/ais_record.hpp"
#include "vkg/sdkg.hpp"
#include "vkg/trajectory.hpp"
#include "vkg/workflow.hpp"

namespace vkg::testing {

inline constexpr std::uint32_t kMmsiA = 219000001;

AisRecord make_record(std::uint32_t mmsi, double t_s, double lat, double lon,
                      std::optional<double> sog = std::nullopt,
                      std::optional<double> cog = std::nullopt,
                      std::string nav = "Under way using engine", std::string type = "Cargo");

/// Point `d` meters from `p` along initial bearing `brg` (great circle).
LatLon destination(LatLon p, double brg_deg, double d_m);

/// Constant velocity along a great circle.
std::vector<AisRecord> straight_track(std::uint32_t mmsi, std::size_t n, double dt_s, double speed_kn,
                                      double bearing_deg, LatLon start = {57.0, 10.0});

/// Local east/north offsets: y = amplitude * sin(2 pi x / wavelength), with the
/// vessel advancing along x at `speed_kn`.
std::vector<AisRecord> sinusoid_track(std::uint32_t mmsi, std::size_t n, double dt_s, double speed_kn,
                                      double amplitude_m, double wavelength_m,
                                      LatLon origin = {57.0, 10.0});

std::vector<AisRecord> stationary_track(std::uint32_t mmsi, std::size_t n, double dt_s,
                                        LatLon at = {57.05, 9.93});

Gap make_gap(const AisRecord& before, const AisRecord& after, std::string id = "g");

/// Observation with the usual three attributes.
Observation observation(const std::string& type, const std::string& nav, const std::string& place,
                        std::string_view behavior, std::optional<std::string> method,
                        std::optional<std::string_view> prev);

/// Cargo vessels under way near port mostly perform Port-Entry, which is best
/// reconstructed by the smooth curve filler.
KnowledgeGraph port_approach_graph();

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// The bundled sample job (data/sample/job.json) writing into `data_dir`.
JobConfig sample_job_config(const std::filesystem::path& data_dir, unsigned workers = 2);

/// Seeded log of synthetic observations over a small vocabulary.
std::vector<Observation> random_observations(std::size_t n, std::uint32_t seed);

}  // namespace vkg::testing
