#pragma once

#include <string>

namespace crowdflow {

constexpr double kEarthRadiusKm = 6371.0;

// Geographic point. Under the planar metric the two components are
// interpreted directly as kilometre offsets.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

enum class Metric { Haversine, PlanarEuclidean };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric metric);

// Great-circle or planar distance in kilometres. Throws std::domain_error
// when a coordinate is outside [-90, 90] x [-180, 180].
double distance_km(const GeoPoint& a, const GeoPoint& b, Metric metric);

// Seconds needed to cover distance_km at speed_kmh. Throws
// std::domain_error for nonpositive speeds.
double travel_time_seconds(double distance_km, double speed_kmh);

}  // namespace crowdflow
