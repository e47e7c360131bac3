#pragma once

namespace crowdroute {

inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  bool valid() const noexcept {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Great-circle distance in kilometers (haversine).
double distance_km(const GeoPoint& a, const GeoPoint& b) noexcept;

// Point reached by moving north/east by the given kilometers on a local
// tangent plane. Only meant for small offsets (synthetic layouts, tests).
GeoPoint offset_km(const GeoPoint& origin, double north_km, double east_km) noexcept;

}  // namespace crowdroute
