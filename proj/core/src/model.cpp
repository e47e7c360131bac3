#include "crowdroute/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "crowdroute/error.hpp"

namespace crowdroute {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyCalibration: return "EmptyCalibration";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kUnknownLandmark: return "UnknownLandmark";
    case ErrorCode::kUnknownWorker: return "UnknownWorker";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNotDiscriminative: return "NotDiscriminative";
    case ErrorCode::kInvalidTrace: return "InvalidTrace";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kNotAssigned: return "NotAssigned";
    case ErrorCode::kWrongQuestion: return "WrongQuestion";
    case ErrorCode::kTaskClosed: return "TaskClosed";
    case ErrorCode::kUnresolvable: return "Unresolvable";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kStorage: return "Storage";
  }
  return "Unknown";
}

namespace {

// ~1.1 km of latitude per bucket.
constexpr double kBucketDeg = 0.01;
constexpr double kKmPerDegLat = kEarthRadiusKm * std::numbers::pi / 180.0;

std::int64_t bucket_of(double deg) noexcept {
  return static_cast<std::int64_t>(std::floor(deg / kBucketDeg));
}

}  // namespace

LandmarkIndex::LandmarkIndex(std::vector<Landmark> landmarks) : landmarks_(std::move(landmarks)) {
  by_id_.reserve(landmarks_.size());
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    const auto& l = landmarks_[i];
    if (l.id.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "landmark with empty id");
    }
    if (!l.location.valid()) {
      throw Error(ErrorCode::kInvalidArgument, "landmark " + l.id + " has invalid coordinates");
    }
    if (!std::isfinite(l.significance) || l.significance < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "landmark " + l.id + " has invalid significance");
    }
    if (!by_id_.emplace(l.id, i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate landmark id " + l.id);
    }
    buckets_[bucket_key(bucket_of(l.location.lat), bucket_of(l.location.lon))].push_back(i);
  }
}

std::int64_t LandmarkIndex::bucket_key(std::int64_t row, std::int64_t col) noexcept {
  // rows span [-9000, 9000], cols [-18000, 18000]
  return (row + 100000) * 1000000 + (col + 100000);
}

const Landmark* LandmarkIndex::find(const LandmarkId& id) const noexcept {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &landmarks_[it->second];
}

const Landmark& LandmarkIndex::at(const LandmarkId& id) const {
  const Landmark* l = find(id);
  if (l == nullptr) {
    throw Error(ErrorCode::kUnknownLandmark, "unknown landmark " + id);
  }
  return *l;
}

SignificanceMap LandmarkIndex::significance_map() const {
  SignificanceMap out;
  for (const auto& l : landmarks_) out.emplace(l.id, l.significance);
  return out;
}

std::vector<std::size_t> LandmarkIndex::scan_candidates(const GeoPoint& q, double radius_km) const {
  std::vector<std::size_t> out;
  const double dlat = radius_km / kKmPerDegLat;
  const double max_abs_lat = std::max(std::abs(q.lat - dlat), std::abs(q.lat + dlat));
  const double coslat = std::cos(std::min(max_abs_lat, 90.0) * std::numbers::pi / 180.0);
  const double dlon = coslat > 1e-3 ? dlat / coslat : 360.0;
  const bool wide = dlat >= 90.0 || dlon >= 180.0 || q.lon - dlon < -180.0 || q.lon + dlon > 180.0;
  const std::int64_t rows = bucket_of(q.lat + dlat) - bucket_of(q.lat - dlat) + 1;
  const std::int64_t cols = bucket_of(q.lon + dlon) - bucket_of(q.lon - dlon) + 1;
  if (wide || rows * cols > static_cast<std::int64_t>(landmarks_.size())) {
    out.resize(landmarks_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }
  for (std::int64_t r = bucket_of(q.lat - dlat); r <= bucket_of(q.lat + dlat); ++r) {
    for (std::int64_t c = bucket_of(q.lon - dlon); c <= bucket_of(q.lon + dlon); ++c) {
      auto it = buckets_.find(bucket_key(r, c));
      if (it != buckets_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  return out;
}

std::vector<const Landmark*> LandmarkIndex::within(const GeoPoint& q, double radius_km) const {
  std::vector<const Landmark*> out;
  if (radius_km < 0.0) return out;
  for (std::size_t i : scan_candidates(q, radius_km)) {
    if (distance_km(q, landmarks_[i].location) <= radius_km) out.push_back(&landmarks_[i]);
  }
  std::sort(out.begin(), out.end(), [](const Landmark* a, const Landmark* b) { return a->id < b->id; });
  return out;
}

const Landmark* LandmarkIndex::nearest_within(const GeoPoint& q, double radius_km) const {
  const Landmark* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i : scan_candidates(q, radius_km)) {
    const Landmark& l = landmarks_[i];
    const double d = distance_km(q, l.location);
    if (d > radius_km) continue;
    if (d < best_d || (d == best_d && best != nullptr && l.id < best->id)) {
      best = &l;
      best_d = d;
    }
  }
  return best;
}

LandmarkIndex LandmarkIndex::with_significance(const SignificanceMap& scores) const {
  std::vector<Landmark> copy = landmarks_;
  for (auto& l : copy) {
    auto it = scores.find(l.id);
    l.significance = it == scores.end() ? 0.0 : it->second;
  }
  return LandmarkIndex(std::move(copy));
}

LandmarkRoute::LandmarkRoute(std::vector<LandmarkId> sequence) {
  for (auto& id : sequence) {
    if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty landmark id in route");
    if (!sequence_.empty() && sequence_.back() == id) continue;
    membership_.insert(id);
    sequence_.push_back(std::move(id));
  }
  if (sequence_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "landmark route must be non-empty");
  }
}

CandidateSet::CandidateSet(std::vector<Entry> entries) {
  if (entries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "candidate set needs at least one route");
  }
  for (auto& e : entries) {
    auto it = std::find_if(routes_.begin(), routes_.end(), [&](const LandmarkRoute& r) {
      return r.membership() == e.route.membership();
    });
    if (it == routes_.end()) {
      routes_.push_back(std::move(e.route));
      provenance_.push_back({std::move(e.source)});
    } else {
      provenance_[static_cast<std::size_t>(it - routes_.begin())].push_back(std::move(e.source));
    }
  }
}

std::size_t CandidateSet::total_proposals() const noexcept {
  std::size_t n = 0;
  for (const auto& p : provenance_) n += p.size();
  return n;
}

LandmarkRoute calibrate(const RawRoute& raw, const LandmarkIndex& index, double snap_radius_km) {
  if (raw.points.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "raw route needs at least two points");
  }
  if (!(snap_radius_km > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "snap radius must be positive");
  }
  std::vector<LandmarkId> snapped;
  for (const auto& p : raw.points) {
    if (!p.valid()) throw Error(ErrorCode::kInvalidArgument, "raw route has invalid coordinates");
    if (const Landmark* l = index.nearest_within(p, snap_radius_km)) snapped.push_back(l->id);
  }
  if (snapped.empty()) {
    throw Error(ErrorCode::kEmptyCalibration, "no route point lies within the snap radius of a landmark");
  }
  return LandmarkRoute(std::move(snapped));
}

bool is_discriminative(const LandmarkSet& selected, const CandidateSet& routes) {
  std::set<std::vector<LandmarkId>> seen;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    std::vector<LandmarkId> joint;
    std::set_intersection(routes.membership(i).begin(), routes.membership(i).end(), selected.begin(),
                          selected.end(), std::back_inserter(joint));
    if (!seen.insert(std::move(joint)).second) return false;
  }
  return true;
}

bool is_simplest_discriminative(const LandmarkSet& selected, const CandidateSet& routes) {
  if (!is_discriminative(selected, routes)) return false;
  for (const auto& l : selected) {
    LandmarkSet reduced = selected;
    reduced.erase(l);
    if (is_discriminative(reduced, routes)) return false;
  }
  return true;
}

double objective_value(const LandmarkSet& selected, const SignificanceMap& significance) {
  if (selected.empty()) throw Error(ErrorCode::kEmptySet, "objective of an empty landmark set");
  double sum = 0.0;
  for (const auto& id : selected) {
    auto it = significance.find(id);
    if (it == significance.end()) throw Error(ErrorCode::kUnknownLandmark, "no significance for " + id);
    sum += it->second;
  }
  return sum / static_cast<double>(selected.size());
}

double objective_value(const LandmarkSet& selected, const LandmarkIndex& index) {
  if (selected.empty()) throw Error(ErrorCode::kEmptySet, "objective of an empty landmark set");
  double sum = 0.0;
  for (const auto& id : selected) sum += index.significance(id);
  return sum / static_cast<double>(selected.size());
}

LandmarkSet beneficial_landmarks(const CandidateSet& routes) {
  LandmarkSet all;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    all.insert(routes.membership(i).begin(), routes.membership(i).end());
  }
  LandmarkSet out;
  for (const auto& id : all) {
    bool everywhere = true;
    for (std::size_t i = 0; i < routes.size() && everywhere; ++i) {
      everywhere = routes.membership(i).count(id) != 0;
    }
    if (!everywhere) out.insert(id);
  }
  return out;
}

SignificanceMap min_max_normalize(const SignificanceMap& raw) {
  SignificanceMap out;
  if (raw.empty()) return out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [id, v] : raw) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite significance for " + id);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const auto& [id, v] : raw) out.emplace(id, hi > lo ? (v - lo) / (hi - lo) : 1.0);
  return out;
}

}  // namespace crowdroute
