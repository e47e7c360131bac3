#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdroute/model.hpp"

namespace crowdroute {

struct VisitEvent {
  std::string traveller;
  LandmarkId landmark;
  std::int64_t timestamp = 0;
  double weight = 1.0;
};

// Bipartite traveller-landmark graph. One edge per distinct (traveller,
// landmark) pair; repeated visits add up into the edge weight.
class VisitGraph {
 public:
  struct Edge {
    std::size_t traveller;
    std::size_t landmark;
    double weight;
  };

  static VisitGraph build(std::span<const VisitEvent> events, const LandmarkIndex& index);

  const std::vector<std::string>& travellers() const noexcept { return travellers_; }
  const std::vector<LandmarkId>& landmarks() const noexcept { return landmarks_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  double weight(const std::string& traveller, const LandmarkId& landmark) const;

 private:
  std::vector<std::string> travellers_;  // sorted
  std::vector<LandmarkId> landmarks_;    // sorted
  std::vector<Edge> edges_;              // sorted by (traveller, landmark)
};

struct HitsOptions {
  std::size_t max_iters = 1000;
  double tol = 1e-9;
};

struct SignificanceResult {
  SignificanceMap scores;  // max == 1
  std::size_t iterations = 0;
  bool converged = false;
};

// Weighted HITS with travellers as authorities and landmarks as hubs. Each
// half-step is L2-normalized; the final hub vector is divided by its max.
SignificanceResult infer_significance(const VisitGraph& graph, const HitsOptions& options = {});

}  // namespace crowdroute
