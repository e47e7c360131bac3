#include "crowdroute/worker_select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdroute/error.hpp"

namespace crowdroute {

ResponseModel estimate_lambda(std::span<const double> hours, double default_lambda) {
  if (!(default_lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "default lambda must be positive");
  if (hours.empty()) return {default_lambda, ResponseModel::Source::kPrior};
  for (double h : hours) {
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidArgument, "response durations must be positive");
  }
  const double mean = std::accumulate(hours.begin(), hours.end(), 0.0) / static_cast<double>(hours.size());
  return {1.0 / mean, ResponseModel::Source::kMaximumLikelihood};
}

double response_probability(const ResponseModel& model, double hours) {
  if (hours < 0.0) throw Error(ErrorCode::kInvalidArgument, "deadline must be non-negative");
  return 1.0 - std::exp(-model.lambda * hours);
}

std::vector<WorkerId> candidate_workers(std::span<const LandmarkId> task_landmarks, const AccumulatedMatrix& accumulated,
                                        std::span<const WorkerProfile> workers, const EligibilityConfig& config,
                                        double deadline_hours) {
  if (task_landmarks.empty()) throw Error(ErrorCode::kInvalidArgument, "task has no landmarks");
  std::vector<std::size_t> cols;
  for (const auto& l : task_landmarks) {
    if (accumulated.has_col(l)) cols.push_back(accumulated.col_of(l));
  }
  std::vector<WorkerId> out;
  for (const auto& w : workers) {
    if (!accumulated.has_row(w.id)) continue;
    const std::size_t row = accumulated.row_of(w.id);
    const bool knows_any = std::any_of(cols.begin(), cols.end(), [&](std::size_t j) { return accumulated.get(row, j) > 0.0; });
    if (!knows_any) continue;
    if (w.outstanding_tasks >= config.max_outstanding) continue;
    const ResponseModel model = estimate_lambda(w.response_hours, config.default_lambda);
    if (response_probability(model, deadline_hours) < config.eta_time) continue;
    out.push_back(w.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<WorkerId, double> preference_scores(const LandmarkId& landmark, std::span<const WorkerId> candidates,
                                             const AccumulatedMatrix& accumulated) {
  std::map<WorkerId, double> scores;
  std::vector<std::pair<double, WorkerId>> ranked;
  const bool known_landmark = accumulated.has_col(landmark);
  for (const auto& w : candidates) {
    scores[w] = 0.0;
    if (!known_landmark || !accumulated.has_row(w)) continue;
    const double f = accumulated.get(w, landmark);
    if (f > 0.0) ranked.emplace_back(f, w);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const double size = static_cast<double>(ranked.size());
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    scores[ranked[r].second] = 1.0 - static_cast<double>(r) / size;
  }
  return scores;
}

WorkerRanking top_k_workers(std::span<const LandmarkId> task_landmarks, const AccumulatedMatrix& accumulated,
                            std::span<const WorkerProfile> workers, const EligibilityConfig& config,
                            double deadline_hours, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const auto candidates = candidate_workers(task_landmarks, accumulated, workers, config, deadline_hours);
  if (candidates.empty()) throw Error(ErrorCode::kNoCandidates, "no eligible worker for the task");

  std::map<WorkerId, RankedWorker> by_id;
  for (const auto& w : candidates) by_id[w].id = w;
  for (const auto& l : task_landmarks) {
    for (const auto& [w, p] : preference_scores(l, candidates, accumulated)) {
      auto& entry = by_id[w];
      entry.breakdown[l] = p;
      entry.total += p;
    }
  }

  WorkerRanking ranking;
  for (auto& [id, entry] : by_id) ranking.tally.push_back(std::move(entry));
  std::stable_sort(ranking.tally.begin(), ranking.tally.end(), [](const RankedWorker& a, const RankedWorker& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.id < b.id;
  });
  const std::size_t take = std::min(k, ranking.tally.size());
  ranking.top.assign(ranking.tally.begin(), ranking.tally.begin() + static_cast<std::ptrdiff_t>(take));
  ranking.shortfall = ranking.tally.size() < k;
  return ranking;
}

}  // namespace crowdroute
