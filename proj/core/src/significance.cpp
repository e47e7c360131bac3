#include "crowdroute/significance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "crowdroute/error.hpp"

namespace crowdroute {

VisitGraph VisitGraph::build(std::span<const VisitEvent> events, const LandmarkIndex& index) {
  std::map<std::pair<std::string, LandmarkId>, double> grouped;
  for (const auto& e : events) {
    if (index.find(e.landmark) == nullptr) {
      throw Error(ErrorCode::kUnknownLandmark, "check-in references unknown landmark " + e.landmark);
    }
    if (e.traveller.empty()) throw Error(ErrorCode::kInvalidArgument, "check-in with empty traveller id");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::kInvalidArgument, "check-in weight must be positive");
    }
    grouped[{e.traveller, e.landmark}] += e.weight;
  }

  VisitGraph g;
  for (const auto& [key, w] : grouped) {
    if (g.travellers_.empty() || g.travellers_.back() != key.first) g.travellers_.push_back(key.first);
    g.landmarks_.push_back(key.second);
  }
  std::sort(g.landmarks_.begin(), g.landmarks_.end());
  g.landmarks_.erase(std::unique(g.landmarks_.begin(), g.landmarks_.end()), g.landmarks_.end());

  g.edges_.reserve(grouped.size());
  for (const auto& [key, w] : grouped) {
    const auto t = std::lower_bound(g.travellers_.begin(), g.travellers_.end(), key.first) - g.travellers_.begin();
    const auto l = std::lower_bound(g.landmarks_.begin(), g.landmarks_.end(), key.second) - g.landmarks_.begin();
    g.edges_.push_back({static_cast<std::size_t>(t), static_cast<std::size_t>(l), w});
  }
  return g;
}

double VisitGraph::weight(const std::string& traveller, const LandmarkId& landmark) const {
  auto t = std::lower_bound(travellers_.begin(), travellers_.end(), traveller);
  auto l = std::lower_bound(landmarks_.begin(), landmarks_.end(), landmark);
  if (t == travellers_.end() || *t != traveller || l == landmarks_.end() || *l != landmark) return 0.0;
  const std::size_t ti = static_cast<std::size_t>(t - travellers_.begin());
  const std::size_t li = static_cast<std::size_t>(l - landmarks_.begin());
  for (const auto& e : edges_) {
    if (e.traveller == ti && e.landmark == li) return e.weight;
  }
  return 0.0;
}

namespace {

void l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

}  // namespace

SignificanceResult infer_significance(const VisitGraph& graph, const HitsOptions& options) {
  if (options.max_iters < 1 || !(options.tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "HITS needs max_iters >= 1 and tol > 0");
  }
  if (graph.edges().empty()) throw Error(ErrorCode::kEmptyGraph, "visit graph has no edges");

  const std::size_t n_landmarks = graph.landmarks().size();
  std::vector<double> hub(n_landmarks, 1.0);
  l2_normalize(hub);
  std::vector<double> authority(graph.travellers().size(), 0.0);
  std::vector<double> next(n_landmarks, 0.0);

  SignificanceResult result;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    std::fill(authority.begin(), authority.end(), 0.0);
    for (const auto& e : graph.edges()) authority[e.traveller] += e.weight * hub[e.landmark];
    l2_normalize(authority);

    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& e : graph.edges()) next[e.landmark] += e.weight * authority[e.traveller];
    l2_normalize(next);

    double delta = 0.0;
    for (std::size_t i = 0; i < n_landmarks; ++i) delta = std::max(delta, std::abs(next[i] - hub[i]));
    hub.swap(next);
    result.iterations = it + 1;
    if (delta < options.tol) {
      result.converged = true;
      break;
    }
  }

  const double top = *std::max_element(hub.begin(), hub.end());
  for (std::size_t i = 0; i < n_landmarks; ++i) {
    result.scores.emplace(graph.landmarks()[i], top > 0.0 ? hub[i] / top : 0.0);
  }
  return result;
}

}  // namespace crowdroute
