#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdroute/geo.hpp"

namespace crowdroute {

using LandmarkId = std::string;
using LandmarkSet = std::set<LandmarkId>;
using SignificanceMap = std::map<LandmarkId, double>;

struct Landmark {
  LandmarkId id;
  std::string name;
  GeoPoint location;
  double significance = 0.0;
};

// Immutable landmark collection with a uniform lat/lon bucket grid for range
// queries. Range results are exact: buckets only prune, haversine decides.
class LandmarkIndex {
 public:
  LandmarkIndex() = default;
  explicit LandmarkIndex(std::vector<Landmark> landmarks);

  std::span<const Landmark> landmarks() const noexcept { return landmarks_; }
  std::size_t size() const noexcept { return landmarks_.size(); }
  bool empty() const noexcept { return landmarks_.empty(); }

  const Landmark* find(const LandmarkId& id) const noexcept;
  const Landmark& at(const LandmarkId& id) const;  // throws kUnknownLandmark
  double significance(const LandmarkId& id) const { return at(id).significance; }
  SignificanceMap significance_map() const;

  // All landmarks with great-circle distance <= radius_km, ordered by id.
  std::vector<const Landmark*> within(const GeoPoint& q, double radius_km) const;

  // Closest landmark within radius_km; ties go to the smaller id.
  const Landmark* nearest_within(const GeoPoint& q, double radius_km) const;

  // Copy with significances replaced; landmarks missing from the map get 0.
  LandmarkIndex with_significance(const SignificanceMap& scores) const;

 private:
  static std::int64_t bucket_key(std::int64_t row, std::int64_t col) noexcept;
  std::vector<std::size_t> scan_candidates(const GeoPoint& q, double radius_km) const;

  std::vector<Landmark> landmarks_;
  std::unordered_map<LandmarkId, std::size_t> by_id_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

struct RawRoute {
  std::vector<GeoPoint> points;  // first = source, last = destination
};

// A route written as the landmarks it passes. Consecutive repeats collapse on
// construction; an empty sequence is rejected.
class LandmarkRoute {
 public:
  LandmarkRoute() = default;
  explicit LandmarkRoute(std::vector<LandmarkId> sequence);

  const std::vector<LandmarkId>& sequence() const noexcept { return sequence_; }
  const LandmarkSet& membership() const noexcept { return membership_; }
  bool contains(const LandmarkId& id) const { return membership_.count(id) != 0; }
  std::size_t size() const noexcept { return sequence_.size(); }

  friend bool operator==(const LandmarkRoute& a, const LandmarkRoute& b) {
    return a.sequence_ == b.sequence_;
  }

 private:
  std::vector<LandmarkId> sequence_;
  LandmarkSet membership_;
};

// Candidate routes with duplicates (by membership) merged. Each merged route
// keeps the list of sources that proposed it.
class CandidateSet {
 public:
  struct Entry {
    std::string source;
    LandmarkRoute route;
  };

  CandidateSet() = default;
  explicit CandidateSet(std::vector<Entry> entries);

  std::size_t size() const noexcept { return routes_.size(); }
  const LandmarkRoute& route(std::size_t i) const { return routes_.at(i); }
  const LandmarkSet& membership(std::size_t i) const { return routes_.at(i).membership(); }
  const std::vector<std::string>& provenance(std::size_t i) const { return provenance_.at(i); }
  std::span<const LandmarkRoute> routes() const noexcept { return routes_; }
  std::size_t total_proposals() const noexcept;

 private:
  std::vector<LandmarkRoute> routes_;
  std::vector<std::vector<std::string>> provenance_;
};

// Snaps each raw point to its nearest landmark within snap_radius_km. Points
// with no landmark in range are skipped; throws kEmptyCalibration if none snap.
LandmarkRoute calibrate(const RawRoute& raw, const LandmarkIndex& index,
                        double snap_radius_km = 0.3);

bool is_discriminative(const LandmarkSet& selected, const CandidateSet& routes);
bool is_simplest_discriminative(const LandmarkSet& selected, const CandidateSet& routes);

// Mean significance of the set. Throws kEmptySet on an empty set.
double objective_value(const LandmarkSet& selected, const LandmarkIndex& index);
double objective_value(const LandmarkSet& selected, const SignificanceMap& significance);

// Union of memberships minus their intersection.
LandmarkSet beneficial_landmarks(const CandidateSet& routes);

// Min-max rescale to [0, 1]. A constant map rescales to all ones.
SignificanceMap min_max_normalize(const SignificanceMap& raw);

}  // namespace crowdroute
