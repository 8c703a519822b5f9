#include "crowdflow/geo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crowdflow {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_range(const GeoPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
    throw std::domain_error("coordinate out of range: (" + std::to_string(p.lat) + ", " +
                            std::to_string(p.lon) + ")");
  }
}

}  // namespace

Metric metric_from_string(const std::string& name) {
  if (name == "haversine") return Metric::Haversine;
  if (name == "planar-euclidean" || name == "planar") return Metric::PlanarEuclidean;
  throw std::domain_error("unknown distance metric: " + name);
}

std::string to_string(Metric metric) {
  return metric == Metric::Haversine ? "haversine" : "planar-euclidean";
}

double distance_km(const GeoPoint& a, const GeoPoint& b, Metric metric) {
  check_range(a);
  check_range(b);
  if (metric == Metric::PlanarEuclidean) {
    return std::hypot(a.lat - b.lat, a.lon - b.lon);
  }
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double travel_time_seconds(double distance_km, double speed_kmh) {
  if (!(speed_kmh > 0.0)) {
    throw std::domain_error("speed must be positive, got " + std::to_string(speed_kmh));
  }
  return distance_km / speed_kmh * 3600.0;
}

}  // namespace crowdflow
