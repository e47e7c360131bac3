#include "crowdroute/task_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "codec.hpp"
#include "crowdroute/error.hpp"
#include "crowdroute/landmark_select.hpp"
#include "crowdroute/worker_select.hpp"

namespace crowdroute {

namespace {

constexpr double kKmPerDegLat = kEarthRadiusKm * std::numbers::pi / 180.0;

std::string task_key(std::uint64_t id) { return "task/" + std::to_string(id); }
std::string request_key(std::uint64_t id) { return "request/" + std::to_string(id); }
std::string truth_key(std::uint64_t id) { return "truth/" + std::to_string(id); }
std::string worker_key(const WorkerId& id) { return "worker/" + id; }
std::string ledger_key(const WorkerId& id) { return "ledger/" + id; }

Timestamp system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

bool is_open(TaskState s) { return s == TaskState::kAssigned || s == TaskState::kCollecting; }

}  // namespace

CellId cell_of(const GeoPoint& p, double cell_km) {
  const double y = p.lat * kKmPerDegLat;
  const auto row = static_cast<std::int64_t>(std::floor(y / cell_km));
  const double center_lat = (static_cast<double>(row) + 0.5) * cell_km / kKmPerDegLat;
  const double km_per_deg_lon = std::max(kKmPerDegLat * std::cos(center_lat * std::numbers::pi / 180.0), 1e-9);
  const auto col = static_cast<std::int64_t>(std::floor(p.lon * km_per_deg_lon / cell_km));
  return {row, col};
}

int hour_of_week(Timestamp t) {
  // 1970-01-01 was a Thursday; shift so that Monday 00:00 is hour 0.
  const std::int64_t hours = (t >= 0 ? t / 3600 : (t - 3599) / 3600) + 3 * 24;
  return static_cast<int>(((hours % 168) + 168) % 168);
}

std::optional<TruthRecord> reuse_truth(const RouteRequest& request, std::span<const TruthRecord> truths,
                                       double cell_km, Timestamp now) {
  const CellId src = cell_of(request.source, cell_km);
  const CellId dst = cell_of(request.destination, cell_km);
  const int bucket = hour_of_week(request.departure);
  const TruthRecord* hit = nullptr;
  for (const auto& t : truths) {
    if (t.source_cell != src || t.destination_cell != dst || t.time_bucket != bucket) continue;
    if (now - t.created_at >= t.ttl_s) continue;
    if (hit == nullptr || t.created_at > hit->created_at || (t.created_at == hit->created_at && t.id > hit->id)) hit = &t;
  }
  if (hit == nullptr) return std::nullopt;
  return *hit;
}

double jaccard(const LandmarkSet& a, const LandmarkSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& id : a) common += b.count(id);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

Evaluation evaluate_candidates(const CandidateSet& candidates, std::span<const TruthRecord> truths, double eta,
                               double tau_agree) {
  const std::size_t n = candidates.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "no candidate routes to evaluate");
  Evaluation ev;
  ev.confidences.assign(n, 0.0);

  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sim[i][j] = sim[j][i] = jaccard(candidates.membership(i), candidates.membership(j));
    }
  }

  // Largest-weight clique of mutually agreeing candidates. Candidate sets are
  // small, so an exhaustive scan over subsets is fine up to 16 routes.
  const std::size_t total = candidates.total_proposals();
  std::uint32_t best_mask = 0;
  std::size_t best_weight = 0;
  const std::size_t limit = std::min<std::size_t>(n, 16);
  for (std::uint32_t mask = 1; mask < (1u << limit); ++mask) {
    std::size_t weight = 0;
    bool clique = true;
    for (std::size_t i = 0; i < limit && clique; ++i) {
      if (!(mask & (1u << i))) continue;
      weight += candidates.provenance(i).size();
      for (std::size_t j = i + 1; j < limit && clique; ++j) {
        if ((mask & (1u << j)) && sim[i][j] < tau_agree) clique = false;
      }
    }
    if (clique && weight > best_weight) {
      best_weight = weight;
      best_mask = mask;
    }
  }
  if (2 * best_weight > total) {
    double best_mean = -1.0;
    for (std::size_t i = 0; i < limit; ++i) {
      if (!(best_mask & (1u << i))) continue;
      double sum = 0.0;
      std::size_t members = 0;
      for (std::size_t j = 0; j < limit; ++j) {
        if (!(best_mask & (1u << j))) continue;
        sum += sim[i][j] * static_cast<double>(candidates.provenance(j).size());
        members += candidates.provenance(j).size();
      }
      const double mean = sum / static_cast<double>(members);
      if (mean > best_mean) {
        best_mean = mean;
        ev.route = i;
      }
    }
    ev.resolved = true;
    ev.by_agreement = true;
    ev.confidence = best_mean;
    return ev;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& t : truths) {
      ev.confidences[i] = std::max(ev.confidences[i], jaccard(candidates.membership(i), t.best_route.membership()));
    }
  }
  const auto best = std::max_element(ev.confidences.begin(), ev.confidences.end());
  if (*best > eta) {
    ev.resolved = true;
    ev.route = static_cast<std::size_t>(best - ev.confidences.begin());
    ev.confidence = *best;
  }
  return ev;
}

std::size_t Task::completed() const {
  return static_cast<std::size_t>(
      std::count_if(assignments.begin(), assignments.end(), [](const Assignment& a) { return a.leaf.has_value(); }));
}

std::map<std::size_t, std::size_t> Task::votes() const {
  std::map<std::size_t, std::size_t> out;
  for (const auto& a : assignments) {
    if (a.leaf) ++out[*a.leaf];
  }
  return out;
}

const Assignment* Task::assignment(const WorkerId& worker) const {
  auto it = std::find_if(assignments.begin(), assignments.end(), [&](const Assignment& a) { return a.worker == worker; });
  return it == assignments.end() ? nullptr : &*it;
}

std::optional<std::size_t> early_stop_check(const Task& task, double eta_stop, std::uint32_t min_votes) {
  const auto votes = task.votes();
  if (votes.empty()) return std::nullopt;
  std::size_t leader = 0;
  std::size_t top = 0;
  std::size_t runner_up = 0;
  for (const auto& [route, count] : votes) {
    if (count > top) {
      runner_up = top;
      top = count;
      leader = route;
    } else if (count > runner_up) {
      runner_up = count;
    }
  }
  if (top == runner_up) return std::nullopt;
  const double k = static_cast<double>(task.assignments.size());
  const auto needed = std::max<std::size_t>(min_votes, static_cast<std::size_t>(std::ceil(eta_stop * k - 1e-12)));
  if (top >= needed) return leader;
  return std::nullopt;
}

std::optional<std::size_t> plurality(const Task& task) {
  std::map<std::size_t, std::pair<std::size_t, Timestamp>> tally;  // route -> (votes, first vote time)
  for (const auto& a : task.assignments) {
    if (!a.leaf) continue;
    auto [it, inserted] = tally.try_emplace(*a.leaf, 0, *a.completed_at);
    ++it->second.first;
    it->second.second = std::min(it->second.second, *a.completed_at);
  }
  std::optional<std::size_t> best;
  std::pair<std::size_t, Timestamp> best_score{0, 0};
  for (const auto& [route, score] : tally) {
    if (!best || score.first > best_score.first ||
        (score.first == best_score.first && score.second < best_score.second)) {
      best = route;
      best_score = score;
    }
  }
  return best;
}

std::uint32_t reward_points(const Assignment& assignment, std::size_t resolved_route) {
  if (!assignment.leaf) return 0;
  return 1 + static_cast<std::uint32_t>(assignment.trace.size()) + (*assignment.leaf == resolved_route ? 2 : 0);
}

TaskService::TaskService(EngineConfig config, std::shared_ptr<KvStore> store, Clock clock)
    : config_(std::move(config)), store_(std::move(store)), clock_(clock ? std::move(clock) : Clock(system_now)) {
  validate(config_);
  if (!store_) store_ = KvStore::open(":memory:");
  load();
}

void TaskService::load() {
  std::vector<Landmark> landmarks;
  for (const auto& [key, value] : store_->scan("landmark/")) landmarks.push_back(json::parse(value).get<Landmark>());
  index_ = LandmarkIndex(std::move(landmarks));
  for (const auto& [key, value] : store_->scan("worker/")) {
    auto w = json::parse(value).get<WorkerProfile>();
    workers_[w.id] = std::move(w);
  }
  for (const auto& [key, value] : store_->scan("request/")) {
    auto r = json::parse(value).get<RequestRecord>();
    next_request_id_ = std::max(next_request_id_, r.id + 1);
    requests_[r.id] = std::move(r);
  }
  for (const auto& [key, value] : store_->scan("task/")) {
    auto t = json::parse(value).get<Task>();
    next_task_id_ = std::max(next_task_id_, t.id + 1);
    tasks_[t.id] = std::move(t);
  }
  for (const auto& [key, value] : store_->scan("truth/")) {
    auto t = json::parse(value).get<TruthRecord>();
    next_truth_id_ = std::max(next_truth_id_, t.id + 1);
    truths_.push_back(std::move(t));
  }
  std::sort(truths_.begin(), truths_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& [key, value] : store_->scan("ledger/")) ledger_[key.substr(7)] = std::stoull(value);
  if (auto m = store_->get("model/accumulated")) accumulated_ = accumulated_from_json(json::parse(*m));
}

void TaskService::log_event(const std::string& json_text) { store_->append_event(json_text); }

void TaskService::log_submitted(const RequestRecord& r) {
  log_event(json{{"type", "request_submitted"}, {"time", r.submitted_at}, {"request", r.id}}.dump());
}

void TaskService::persist_task(const Task& task) { store_->put(task_key(task.id), json(task).dump()); }
void TaskService::persist_request(const RequestRecord& r) { store_->put(request_key(r.id), json(r).dump()); }
void TaskService::persist_worker(const WorkerProfile& w) { store_->put(worker_key(w.id), json(w).dump()); }

void TaskService::ingest_landmarks(std::vector<Landmark> landmarks) {
  std::lock_guard lock(mutex_);
  LandmarkIndex next(landmarks);
  auto tx = store_->transaction();
  for (const auto& [key, value] : store_->scan("landmark/")) store_->erase(key);
  for (const auto& l : next.landmarks()) store_->put("landmark/" + l.id, json(l).dump());
  log_event(json{{"type", "ingest_landmarks"}, {"time", clock_()}, {"count", next.size()}}.dump());
  tx.commit();
  index_ = std::move(next);
}

void TaskService::ingest_workers(std::vector<WorkerProfile> workers) {
  std::lock_guard lock(mutex_);
  auto tx = store_->transaction();
  for (auto& w : workers) {
    json check = w;
    (void)check.get<WorkerProfile>();  // validation
    persist_worker(w);
  }
  log_event(json{{"type", "ingest_workers"}, {"time", clock_()}, {"count", workers.size()}}.dump());
  tx.commit();
  for (auto& w : workers) workers_[w.id] = std::move(w);
}

SignificanceResult TaskService::ingest_checkins(std::span<const VisitEvent> events) {
  std::lock_guard lock(mutex_);
  const auto graph = VisitGraph::build(events, index_);
  auto result = infer_significance(graph, config_.hits);
  LandmarkIndex next = index_.with_significance(result.scores);
  auto tx = store_->transaction();
  for (const auto& l : next.landmarks()) store_->put("landmark/" + l.id, json(l).dump());
  log_event(json{{"type", "ingest_checkins"}, {"time", clock_()}, {"events", events.size()},
                 {"iterations", result.iterations}}.dump());
  tx.commit();
  index_ = std::move(next);
  return result;
}

LatentFactors TaskService::retrain() {
  std::lock_guard lock(mutex_);
  std::vector<WorkerProfile> profiles;
  for (const auto& [id, w] : workers_) profiles.push_back(w);
  const auto observed = build_matrix(profiles, index_, config_.familiarity);
  PmfConfig pmf = config_.pmf;
  auto factors = train_pmf(observed, pmf);
  const auto predicted = predict_matrix(factors, observed);
  auto accumulated = accumulate(predicted, index_, config_.familiarity.eta_dis_km);
  auto tx = store_->transaction();
  store_->put("model/accumulated", json(static_cast<const ScoreMatrix&>(accumulated)).dump());
  log_event(json{{"type", "retrain"}, {"time", clock_()}, {"iterations", factors.iterations},
                 {"objective", factors.objective}, {"observed", observed.nnz()}}.dump());
  tx.commit();
  accumulated_ = std::move(accumulated);
  return factors;
}

std::vector<TruthRecord> TaskService::truths_for_cells(const CellId& src, const CellId& dst) const {
  std::vector<TruthRecord> out;
  for (const auto& t : truths_) {
    if (t.source_cell == src && t.destination_cell == dst) out.push_back(t);
  }
  return out;
}

void TaskService::store_truth(TruthRecord truth) {
  truth.id = next_truth_id_++;
  store_->put(truth_key(truth.id), json(truth).dump());
  log_event(json{{"type", "truth_stored"}, {"time", truth.created_at}, {"truth", truth.id},
                 {"confidence", truth.confidence}, {"method", std::string(to_string(truth.method))}}.dump());
  truths_.push_back(std::move(truth));
}

RequestRecord TaskService::submit(const RouteRequest& request, const std::vector<CandidateInput>& candidates) {
  if (!request.source.valid() || !request.destination.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "request has invalid coordinates");
  }
  if (request.source == request.destination) {
    throw Error(ErrorCode::kInvalidArgument, "source and destination must differ");
  }
  if (!(request.deadline_hours > 0.0)) throw Error(ErrorCode::kInvalidArgument, "deadline must be positive");

  std::lock_guard lock(mutex_);
  const Timestamp now = clock_();
  RequestRecord record;
  record.request = request;
  record.submitted_at = now;

  const CellId src = cell_of(request.source, config_.cell_km);
  const CellId dst = cell_of(request.destination, config_.cell_km);
  auto resolve_with = [&](ResolutionMethod method, const LandmarkRoute& route, std::vector<std::string> provenance,
                          double confidence) {
    record.status = RequestRecord::Status::kResolved;
    record.method = method;
    record.route = route;
    record.provenance = std::move(provenance);
    record.confidence = confidence;
    record.resolved_at = now;
  };

  if (auto hit = reuse_truth(request, truths_, config_.cell_km, now)) {
    auto tx = store_->transaction();
    record.id = next_request_id_++;
    log_submitted(record);
    resolve_with(ResolutionMethod::kTruthReuse, hit->best_route, hit->provenance, hit->confidence);
    persist_request(record);
    log_event(json{{"type", "request_resolved"}, {"time", now}, {"request", record.id}, {"method", "truth-reuse"},
                   {"truth", hit->id}}.dump());
    tx.commit();
    requests_[record.id] = record;
    return record;
  }

  std::vector<CandidateSet::Entry> entries;
  for (const auto& c : candidates) {
    if (!c.landmarks.empty()) {
      for (const auto& id : c.landmarks) index_.at(id);
      entries.push_back({c.source, LandmarkRoute(c.landmarks)});
    } else {
      entries.push_back({c.source, calibrate(RawRoute{c.points}, index_, config_.snap_radius_km)});
    }
  }
  CandidateSet set(std::move(entries));

  const auto matching = truths_for_cells(src, dst);
  const Evaluation ev = evaluate_candidates(set, matching, config_.eta_confidence, config_.tau_agree);
  record.confidences = ev.confidences;
  if (ev.resolved) {
    auto tx = store_->transaction();
    record.id = next_request_id_++;
    log_submitted(record);
    resolve_with(ResolutionMethod::kAutoEval, set.route(ev.route), set.provenance(ev.route), ev.confidence);
    persist_request(record);
    log_event(json{{"type", "request_resolved"}, {"time", now}, {"request", record.id}, {"method", "auto-eval"},
                   {"route", ev.route}, {"agreement", ev.by_agreement}, {"confidence", ev.confidence}}.dump());
    if (ev.confidence >= config_.eta_confidence) {
      store_truth({.id = 0,
                 .source_cell = src,
                   .destination_cell = dst,
                   .time_bucket = hour_of_week(request.departure),
                   .best_route = set.route(ev.route),
                   .provenance = set.provenance(ev.route),
                   .confidence = ev.confidence,
                   .created_at = now,
                   .ttl_s = config_.truth_ttl_s,
                   .method = ResolutionMethod::kAutoEval});
    }
    tx.commit();
    requests_[record.id] = record;
    return record;
  }

  // Crowd path: landmark selection, question ordering, worker assignment.
  const SelectionProblem problem(set, index_.significance_map(), {.relax_min_size = config_.relax_min_size});
  const SelectionResult selection = select_landmarks(problem, config_.selection);
  const LandmarkSet chosen(selection.chosen.begin(), selection.chosen.end());

  Task task;
  task.candidates = set;
  task.selected = selection.chosen;
  task.selection_value = selection.value;
  task.tree = build_tree(chosen, set, index_.significance_map());
  task.request = request;
  task.created_at = now;
  task.deadline_at = now + static_cast<Timestamp>(std::llround(request.deadline_hours * 3600.0));
  task.next_retry_at = now;

  auto tx = store_->transaction();
  record.id = next_request_id_++;
  log_submitted(record);
  task.id = next_task_id_++;
  task.request_id = record.id;
  record.task_id = task.id;
  log_event(json{{"type", "task_created"}, {"time", now}, {"task", task.id}, {"request", record.id},
                 {"candidates", set.size()}, {"selected", task.selected}, {"algorithm", std::string(to_string(selection.algorithm))},
                 {"tree_depth", task.tree.depth()}}.dump());
  try_assign(task, now);
  persist_task(task);
  persist_request(record);
  tx.commit();
  tasks_[task.id] = task;
  requests_[record.id] = record;
  return record;
}

void TaskService::try_assign(Task& task, Timestamp now) {
  std::vector<WorkerProfile> profiles;
  for (const auto& [id, w] : workers_) profiles.push_back(w);
  const double remaining_hours = static_cast<double>(task.deadline_at - now) / 3600.0;
  try {
    if (accumulated_.rows() == 0) throw Error(ErrorCode::kNoCandidates, "familiarity model not trained");
    const auto ranking = top_k_workers(task.selected, accumulated_, profiles, config_.eligibility,
                                       std::max(remaining_hours, 0.0), config_.eligibility.k);
    for (const auto& r : ranking.top) {
      auto& w = workers_.at(r.id);
      // quota check-and-increment happens under the service lock
      if (w.outstanding_tasks >= config_.eligibility.max_outstanding) continue;
      ++w.outstanding_tasks;
      persist_worker(w);
      task.assignments.push_back({.worker = r.id, .trace = {}, .leaf = std::nullopt, .assigned_at = now, .completed_at = std::nullopt});
    }
    if (task.assignments.empty()) throw Error(ErrorCode::kNoCandidates, "no worker with spare quota");
    task.shortfall = ranking.shortfall;
    task.state = TaskState::kAssigned;
    std::vector<WorkerId> ids;
    for (const auto& a : task.assignments) ids.push_back(a.worker);
    log_event(json{{"type", "task_assigned"}, {"time", now}, {"task", task.id}, {"workers", ids},
                   {"shortfall", task.shortfall}}.dump());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoCandidates) throw;
    task.state = TaskState::kCreated;
    ++task.retries;
    task.next_retry_at = now + config_.retry_backoff_s * static_cast<std::int64_t>(std::min<std::uint32_t>(task.retries, 16));
    log_event(json{{"type", "task_unassigned"}, {"time", now}, {"task", task.id}, {"retries", task.retries},
                   {"next_retry_at", task.next_retry_at}}.dump());
  }
}

void TaskService::release_quota(const WorkerId& worker) {
  auto it = workers_.find(worker);
  if (it == workers_.end()) return;
  if (it->second.outstanding_tasks > 0) --it->second.outstanding_tasks;
  persist_worker(it->second);
}

void TaskService::resolve(Task& task, Timestamp now) {
  const auto winner = plurality(task);
  if (!winner) throw Error(ErrorCode::kUnresolvable, "task has no completed trace");
  task.state = TaskState::kResolved;
  task.resolution = *winner;
  const LandmarkRoute& route = task.candidates.route(*winner);
  const auto votes = task.votes();
  const double share = static_cast<double>(votes.at(*winner)) / static_cast<double>(task.completed());

  for (const auto& a : task.assignments) {
    auto it = workers_.find(a.worker);
    if (it == workers_.end()) continue;
    auto& w = it->second;
    for (const auto& ans : a.trace) {
      auto& h = w.history[ans.landmark];
      (ans.yes == route.contains(ans.landmark) ? h.correct : h.wrong) += 1;
    }
    if (!a.leaf && w.outstanding_tasks > 0) --w.outstanding_tasks;
    persist_worker(w);
    if (const auto points = reward_points(a, *winner); points > 0) {
      ledger_[a.worker] += points;
      store_->put(ledger_key(a.worker), std::to_string(ledger_[a.worker]));
      log_event(json{{"type", "reward"}, {"time", now}, {"task", task.id}, {"worker", a.worker},
                     {"points", points}}.dump());
    }
  }

  auto& record = requests_.at(task.request_id);
  record.status = RequestRecord::Status::kResolved;
  record.method = ResolutionMethod::kCrowd;
  record.route = route;
  record.provenance = task.candidates.provenance(*winner);
  record.confidence = share;
  record.resolved_at = now;
  persist_request(record);

  store_truth({.id = 0,
                 .source_cell = cell_of(task.request.source, config_.cell_km),
               .destination_cell = cell_of(task.request.destination, config_.cell_km),
               .time_bucket = hour_of_week(task.request.departure),
               .best_route = route,
               .provenance = task.candidates.provenance(*winner),
               .confidence = share,
               .created_at = now,
               .ttl_s = config_.truth_ttl_s,
               .method = ResolutionMethod::kCrowd});
  log_event(json{{"type", "task_resolved"}, {"time", now}, {"task", task.id}, {"request", task.request_id},
                 {"route", *winner}, {"confidence", share}, {"completed", task.completed()},
                 {"early_stop", task.early_stopped}}.dump());
  log_event(json{{"type", "request_resolved"}, {"time", now}, {"request", task.request_id}, {"method", "crowd"},
                 {"route", *winner}}.dump());
}

void TaskService::expire(Task& task, Timestamp now) {
  task.state = TaskState::kExpired;
  for (const auto& a : task.assignments) {
    if (!a.leaf) release_quota(a.worker);
  }
  auto& record = requests_.at(task.request_id);
  record.status = RequestRecord::Status::kExpired;
  record.resolved_at = now;
  persist_request(record);
  log_event(json{{"type", "task_expired"}, {"time", now}, {"task", task.id}, {"request", task.request_id}}.dump());
}

void TaskService::tick() {
  std::lock_guard lock(mutex_);
  const Timestamp now = clock_();
  for (auto& [id, task] : tasks_) {
    if (task.state == TaskState::kResolved || task.state == TaskState::kExpired) continue;
    if (now >= task.deadline_at) {
      auto tx = store_->transaction();
      if (task.completed() > 0) {
        resolve(task, now);
      } else {
        expire(task, now);
      }
      persist_task(task);
      tx.commit();
      continue;
    }
    if (task.state == TaskState::kCreated && now >= task.next_retry_at) {
      auto tx = store_->transaction();
      try_assign(task, now);
      persist_task(task);
      tx.commit();
    }
  }
}

QuestionPrompt TaskService::next_question(std::uint64_t task_id, const WorkerId& worker) const {
  std::lock_guard lock(mutex_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "no task " + std::to_string(task_id));
  const Task& task = it->second;
  const Assignment* a = task.assignment(worker);
  if (a == nullptr) throw Error(ErrorCode::kNotAssigned, worker + " is not assigned to task " + std::to_string(task_id));
  if (!a->leaf && !is_open(task.state)) throw Error(ErrorCode::kTaskClosed, "task " + std::to_string(task_id) + " is closed");
  const NextStep step = task.tree.next(a->trace);
  QuestionPrompt p;
  p.task_id = task_id;
  p.question_index = step.depth;
  p.departure = task.request.departure;
  p.finished = step.resolved;
  if (step.resolved) {
    p.leaf = step.route;
  } else {
    const Landmark& l = index_.at(step.landmark);
    p.landmark = l.id;
    p.landmark_name = l.name;
    p.location = l.location;
  }
  return p;
}

AnswerOutcome TaskService::record_answer(std::uint64_t task_id, const WorkerId& worker, const LandmarkId& landmark,
                                         bool yes) {
  std::lock_guard lock(mutex_);
  const Timestamp now = clock_();
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "no task " + std::to_string(task_id));
  Task& task = it->second;
  auto slot = std::find_if(task.assignments.begin(), task.assignments.end(),
                           [&](const Assignment& a) { return a.worker == worker; });
  if (slot == task.assignments.end()) {
    throw Error(ErrorCode::kNotAssigned, worker + " is not assigned to task " + std::to_string(task_id));
  }

  // A repeated (worker, question) submission replays the original response.
  for (std::size_t i = 0; i < slot->trace.size(); ++i) {
    if (slot->trace[i].landmark == landmark) {
      AnswerOutcome out;
      out.duplicate = true;
      out.step = task.tree.next(std::span<const Answer>(slot->trace).first(i + 1));
      out.task_resolved = task.state == TaskState::kResolved;
      return out;
    }
  }
  if (!is_open(task.state)) throw Error(ErrorCode::kTaskClosed, "task " + std::to_string(task_id) + " is closed");
  const NextStep expected = task.tree.next(slot->trace);
  if (expected.resolved) throw Error(ErrorCode::kWrongQuestion, worker + " has already finished task " + std::to_string(task_id));
  if (expected.landmark != landmark) {
    throw Error(ErrorCode::kWrongQuestion, "expected an answer about " + expected.landmark + ", got " + landmark);
  }

  auto tx = store_->transaction();
  slot->trace.push_back({landmark, yes});
  task.state = TaskState::kCollecting;
  AnswerOutcome out;
  out.step = task.tree.next(slot->trace);
  log_event(json{{"type", "answer"}, {"time", now}, {"task", task_id}, {"worker", worker}, {"landmark", landmark},
                 {"yes", yes}}.dump());
  if (out.step.resolved) {
    slot->leaf = out.step.route;
    slot->completed_at = now;
    auto& w = workers_.at(worker);
    if (w.outstanding_tasks > 0) --w.outstanding_tasks;
    const double hours = static_cast<double>(now - slot->assigned_at) / 3600.0;
    if (hours > 0.0) w.response_hours.push_back(hours);
    persist_worker(w);
    log_event(json{{"type", "trace_completed"}, {"time", now}, {"task", task_id}, {"worker", worker},
                   {"leaf", out.step.route}, {"questions", slot->trace.size()}}.dump());
    if (auto early = early_stop_check(task, config_.eta_stop, config_.min_votes);
        early && task.completed() < task.assignments.size()) {
      task.early_stopped = true;
      log_event(json{{"type", "early_stop"}, {"time", now}, {"task", task_id}, {"route", *early},
                     {"completed", task.completed()}}.dump());
      resolve(task, now);
    } else if (task.completed() == task.assignments.size()) {
      resolve(task, now);
    }
    out.task_resolved = task.state == TaskState::kResolved;
  }
  persist_task(task);
  tx.commit();
  return out;
}

RequestRecord TaskService::request(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = requests_.find(id);
  if (it == requests_.end()) throw Error(ErrorCode::kNotFound, "no request " + std::to_string(id));
  return it->second;
}

Task TaskService::task(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "no task " + std::to_string(id));
  return it->second;
}

std::vector<Task> TaskService::tasks() const {
  std::lock_guard lock(mutex_);
  std::vector<Task> out;
  for (const auto& [id, t] : tasks_) out.push_back(t);
  return out;
}

std::vector<TruthRecord> TaskService::truths() const {
  std::lock_guard lock(mutex_);
  return truths_;
}

std::vector<std::uint64_t> TaskService::open_assignments(const WorkerId& worker) const {
  std::lock_guard lock(mutex_);
  std::vector<std::uint64_t> out;
  for (const auto& [id, t] : tasks_) {
    if (!is_open(t.state)) continue;
    const Assignment* a = t.assignment(worker);
    if (a != nullptr && !a->leaf) out.push_back(id);
  }
  return out;
}

std::uint64_t TaskService::reward_balance(const WorkerId& worker) const {
  std::lock_guard lock(mutex_);
  auto it = ledger_.find(worker);
  return it == ledger_.end() ? 0 : it->second;
}

WorkerProfile TaskService::worker(const WorkerId& id) const {
  std::lock_guard lock(mutex_);
  auto it = workers_.find(id);
  if (it == workers_.end()) throw Error(ErrorCode::kUnknownWorker, "unknown worker " + id);
  return it->second;
}

std::vector<WorkerProfile> TaskService::workers() const {
  std::lock_guard lock(mutex_);
  std::vector<WorkerProfile> out;
  for (const auto& [id, w] : workers_) out.push_back(w);
  return out;
}

std::vector<Landmark> TaskService::landmarks() const {
  std::lock_guard lock(mutex_);
  return {index_.landmarks().begin(), index_.landmarks().end()};
}

AccumulatedMatrix TaskService::accumulated() const {
  std::lock_guard lock(mutex_);
  return accumulated_;
}

std::vector<LoggedEvent> TaskService::events() const {
  std::vector<LoggedEvent> out;
  for (auto& [seq, payload] : store_->events()) out.push_back({seq, std::move(payload)});
  return out;
}

}  // namespace crowdroute
