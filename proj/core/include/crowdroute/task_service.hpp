#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdroute/config.hpp"
#include "crowdroute/kv_store.hpp"
#include "crowdroute/model.hpp"
#include "crowdroute/question_tree.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/worker_model.hpp"

namespace crowdroute {

using Timestamp = std::int64_t;  // unix seconds

struct RouteRequest {
  GeoPoint source;
  GeoPoint destination;
  Timestamp departure = 0;
  double deadline_hours = 24.0;
  std::string requester;
};

// A proposed route as delivered by an upstream source: either landmark ids or
// raw coordinates that get calibrated against the landmark index.
struct CandidateInput {
  std::string source;
  std::vector<LandmarkId> landmarks;
  std::vector<GeoPoint> points;
};

struct CellId {
  std::int64_t row = 0;
  std::int64_t col = 0;
  friend bool operator==(const CellId&, const CellId&) = default;
};

// Square grid cell of roughly cell_km on a side.
CellId cell_of(const GeoPoint& p, double cell_km);

// Hours since Monday 00:00 UTC, in [0, 168).
int hour_of_week(Timestamp t);

enum class ResolutionMethod { kTruthReuse, kAutoEval, kCrowd };
std::string_view to_string(ResolutionMethod method) noexcept;

struct TruthRecord {
  std::uint64_t id = 0;
  CellId source_cell;
  CellId destination_cell;
  int time_bucket = 0;
  LandmarkRoute best_route;
  std::vector<std::string> provenance;
  double confidence = 0.0;
  Timestamp created_at = 0;
  std::int64_t ttl_s = 0;
  ResolutionMethod method = ResolutionMethod::kCrowd;
};

// Hit iff both endpoints fall into the record's cells, the departure hour of
// week matches and the record is younger than its ttl. Newest hit wins.
std::optional<TruthRecord> reuse_truth(const RouteRequest& request, std::span<const TruthRecord> truths,
                                       double cell_km, Timestamp now);

double jaccard(const LandmarkSet& a, const LandmarkSet& b);

struct Evaluation {
  bool resolved = false;
  bool by_agreement = false;
  std::size_t route = 0;
  double confidence = 0.0;
  std::vector<double> confidences;  // per candidate, truth-based
};

// (a) a cluster of candidates with pairwise Jaccard >= tau_agree holding a
// strict majority of the proposals resolves to its most central member;
// (b) otherwise each candidate's confidence is its best Jaccard against the
// given truths and the best one resolves if it exceeds eta.
Evaluation evaluate_candidates(const CandidateSet& candidates, std::span<const TruthRecord> truths, double eta,
                               double tau_agree);

enum class TaskState { kCreated, kAssigned, kCollecting, kResolved, kExpired };
std::string_view to_string(TaskState state) noexcept;

struct Assignment {
  WorkerId worker;
  AnswerTrace trace;
  std::optional<std::size_t> leaf;
  Timestamp assigned_at = 0;
  std::optional<Timestamp> completed_at;
};

struct Task {
  std::uint64_t id = 0;
  std::uint64_t request_id = 0;
  RouteRequest request;
  CandidateSet candidates;
  std::vector<LandmarkId> selected;
  double selection_value = 0.0;
  QuestionTree tree;
  std::vector<Assignment> assignments;
  TaskState state = TaskState::kCreated;
  bool shortfall = false;
  bool early_stopped = false;
  std::uint32_t retries = 0;
  Timestamp created_at = 0;
  Timestamp deadline_at = 0;
  Timestamp next_retry_at = 0;
  std::optional<std::size_t> resolution;

  std::size_t completed() const;
  std::map<std::size_t, std::size_t> votes() const;  // leaf route -> count
  const Assignment* assignment(const WorkerId& worker) const;
};

// Resolve early iff the unique leader has >= max(min_votes, ceil(eta_stop * k))
// votes, k being the number of assigned workers.
std::optional<std::size_t> early_stop_check(const Task& task, double eta_stop, std::uint32_t min_votes);

// Most-voted leaf; ties go to the route whose first vote came in earliest.
std::optional<std::size_t> plurality(const Task& task);

// 1 + questions answered + 2 if the leaf matches; 0 for incomplete traces.
std::uint32_t reward_points(const Assignment& assignment, std::size_t resolved_route);

struct RequestRecord {
  enum class Status { kPending, kResolved, kExpired };
  std::uint64_t id = 0;
  RouteRequest request;
  Status status = Status::kPending;
  std::optional<ResolutionMethod> method;
  std::optional<LandmarkRoute> route;
  std::vector<std::string> provenance;
  double confidence = 0.0;
  std::vector<double> confidences;
  std::optional<std::uint64_t> task_id;
  Timestamp submitted_at = 0;
  std::optional<Timestamp> resolved_at;
};
std::string_view to_string(RequestRecord::Status status) noexcept;

struct QuestionPrompt {
  std::uint64_t task_id = 0;
  bool finished = false;          // worker reached a leaf
  std::size_t question_index = 0;  // answers already given
  LandmarkId landmark;
  std::string landmark_name;
  GeoPoint location;
  Timestamp departure = 0;
  std::optional<std::size_t> leaf;
};

struct AnswerOutcome {
  NextStep step;
  bool duplicate = false;
  bool task_resolved = false;
};

struct LoggedEvent {
  std::uint64_t seq = 0;
  std::string json;
};

// Request intake through resolution. All public members are thread-safe;
// mutations are serialized and each one commits a single store transaction.
class TaskService {
 public:
  using Clock = std::function<Timestamp()>;

  TaskService(EngineConfig config, std::shared_ptr<KvStore> store, Clock clock = {});

  const EngineConfig& config() const noexcept { return config_; }

  // Replaces the landmark catalogue. Significances are taken as given.
  void ingest_landmarks(std::vector<Landmark> landmarks);
  // Adds or replaces worker profiles by id.
  void ingest_workers(std::vector<WorkerProfile> workers);
  // Recomputes significances from check-ins and stores them on the landmarks.
  SignificanceResult ingest_checkins(std::span<const VisitEvent> events);
  // Rebuilds M, trains PMF, predicts M' and accumulates M*.
  LatentFactors retrain();

  RequestRecord submit(const RouteRequest& request, const std::vector<CandidateInput>& candidates);
  void tick();

  QuestionPrompt next_question(std::uint64_t task_id, const WorkerId& worker) const;
  AnswerOutcome record_answer(std::uint64_t task_id, const WorkerId& worker, const LandmarkId& landmark, bool yes);

  RequestRecord request(std::uint64_t id) const;
  Task task(std::uint64_t id) const;
  std::vector<Task> tasks() const;
  std::vector<TruthRecord> truths() const;
  std::vector<std::uint64_t> open_assignments(const WorkerId& worker) const;
  std::uint64_t reward_balance(const WorkerId& worker) const;
  WorkerProfile worker(const WorkerId& id) const;
  std::vector<WorkerProfile> workers() const;
  std::vector<Landmark> landmarks() const;
  AccumulatedMatrix accumulated() const;
  std::vector<LoggedEvent> events() const;

  Timestamp now() const { return clock_(); }

 private:
  void load();
  void log_event(const std::string& json);
  void log_submitted(const RequestRecord& record);
  void persist_task(const Task& task);
  void persist_request(const RequestRecord& record);
  void persist_worker(const WorkerProfile& worker);
  void try_assign(Task& task, Timestamp now);
  void resolve(Task& task, Timestamp now);
  void expire(Task& task, Timestamp now);
  void release_quota(const WorkerId& worker);
  std::vector<TruthRecord> truths_for_cells(const CellId& src, const CellId& dst) const;
  void store_truth(TruthRecord truth);

  EngineConfig config_;
  std::shared_ptr<KvStore> store_;
  Clock clock_;
  mutable std::mutex mutex_;

  LandmarkIndex index_;
  std::map<WorkerId, WorkerProfile> workers_;
  AccumulatedMatrix accumulated_;
  std::map<std::uint64_t, RequestRecord> requests_;
  std::map<std::uint64_t, Task> tasks_;
  std::vector<TruthRecord> truths_;
  std::map<WorkerId, std::uint64_t> ledger_;
  std::uint64_t next_request_id_ = 1;
  std::uint64_t next_task_id_ = 1;
  std::uint64_t next_truth_id_ = 1;
};

}  // namespace crowdroute
