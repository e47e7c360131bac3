#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "crowdroute/worker_model.hpp"

namespace crowdroute {

struct ResponseModel {
  enum class Source { kMaximumLikelihood, kPrior };
  double lambda = 1.0 / 24.0;  // responses per hour
  Source source = Source::kPrior;
};

// Exponential MLE (1 / mean); falls back to default_lambda on empty history.
ResponseModel estimate_lambda(std::span<const double> hours, double default_lambda = 1.0 / 24.0);

// P(response within `hours`) = 1 - exp(-lambda * hours).
double response_probability(const ResponseModel& model, double hours);

struct EligibilityConfig {
  double eta_time = 0.5;               // minimum response probability
  std::uint32_t max_outstanding = 5;   // quota
  std::size_t k = 5;                   // workers per task
  double default_lambda = 1.0 / 24.0;  // prior for workers without history
};

// Workers with positive accumulated familiarity on at least one task landmark,
// response probability >= eta_time and spare quota. Sorted by id.
std::vector<WorkerId> candidate_workers(std::span<const LandmarkId> task_landmarks, const AccumulatedMatrix& accumulated,
                                        std::span<const WorkerProfile> workers, const EligibilityConfig& config,
                                        double deadline_hours);

// Rated vote of one landmark: rank candidates with positive F by F
// descending (ties by id) and score 1 - (rank - 1) / |ranked|; others get 0.
std::map<WorkerId, double> preference_scores(const LandmarkId& landmark, std::span<const WorkerId> candidates,
                                             const AccumulatedMatrix& accumulated);

struct RankedWorker {
  WorkerId id;
  double total = 0.0;
  std::map<LandmarkId, double> breakdown;
};

struct WorkerRanking {
  std::vector<RankedWorker> tally;  // every candidate, best first
  std::vector<RankedWorker> top;    // first min(k, |tally|)
  bool shortfall = false;           // fewer than k candidates
};

// Sums the per-landmark votes and keeps the k best (ties by id). Throws
// kNoCandidates when no worker survives the filters.
WorkerRanking top_k_workers(std::span<const LandmarkId> task_landmarks, const AccumulatedMatrix& accumulated,
                            std::span<const WorkerProfile> workers, const EligibilityConfig& config,
                            double deadline_hours, std::size_t k);

}  // namespace crowdroute
