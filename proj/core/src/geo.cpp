#include "crowdroute/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crowdroute {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

double distance_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

GeoPoint offset_km(const GeoPoint& origin, double north_km, double east_km) noexcept {
  const double dlat = north_km / kEarthRadiusKm / kDegToRad;
  const double coslat = std::max(std::cos(origin.lat * kDegToRad), 1e-12);
  const double dlon = east_km / (kEarthRadiusKm * coslat) / kDegToRad;
  return GeoPoint{origin.lat + dlat, origin.lon + dlon};
}

}  // namespace crowdroute
