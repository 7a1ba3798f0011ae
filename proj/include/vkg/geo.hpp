#pragma once

namespace vkg {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kMetersPerNauticalMile = 1852.0;
inline constexpr double kPi = 3.14159265358979323846;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Great-circle distance on a sphere of radius kEarthRadiusM, in meters.
double haversine(LatLon a, LatLon b);

/// Signed shortest-arc difference `to - from` in (-180, 180].
double shortest_arc(double from_deg, double to_deg);

/// Wraps an angle into [0, 360).
double wrap_360(double deg);

/// Wraps a longitude into [-180, 180].
double wrap_lon(double deg);

inline double mps_to_knots(double mps) { return mps * 3600.0 / kMetersPerNauticalMile; }
inline double knots_to_mps(double kn) { return kn * kMetersPerNauticalMile / 3600.0; }

}  // namespace vkg
