#include "codec.hpp"

#include "crowdroute/error.hpp"

namespace crowdroute {

void to_json(json& j, const GeoPoint& p) { j = json{{"lat", p.lat}, {"lon", p.lon}}; }
void from_json(const json& j, GeoPoint& p) {
  p.lat = j.at("lat").get<double>();
  p.lon = j.at("lon").get<double>();
}

void to_json(json& j, const Landmark& l) {
  j = json{{"id", l.id}, {"name", l.name}, {"location", l.location}, {"significance", l.significance}};
}
void from_json(const json& j, Landmark& l) {
  l.id = j.at("id").get<std::string>();
  l.name = j.value("name", l.id);
  l.location = j.at("location").get<GeoPoint>();
  l.significance = j.value("significance", 0.0);
}

void to_json(json& j, const LandmarkRoute& r) { j = r.sequence(); }
void from_json(const json& j, LandmarkRoute& r) { r = LandmarkRoute(j.get<std::vector<LandmarkId>>()); }

void to_json(json& j, const CandidateSet& c) {
  j = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    j.push_back({{"route", c.route(i)}, {"provenance", c.provenance(i)}});
  }
}
void from_json(const json& j, CandidateSet& c) {
  std::vector<CandidateSet::Entry> entries;
  for (const auto& item : j) {
    const auto route = item.at("route").get<LandmarkRoute>();
    for (const auto& source : item.at("provenance")) entries.push_back({source.get<std::string>(), route});
  }
  c = CandidateSet(std::move(entries));
}

void to_json(json& j, const Answer& a) { j = json{{"landmark", a.landmark}, {"yes", a.yes}}; }
void from_json(const json& j, Answer& a) {
  a.landmark = j.at("landmark").get<std::string>();
  a.yes = j.at("yes").get<bool>();
}

void to_json(json& j, const WorkerProfile& w) {
  json history = json::object();
  for (const auto& [l, h] : w.history) history[l] = {{"correct", h.correct}, {"wrong", h.wrong}};
  j = json{{"id", w.id},
           {"home", w.home},
           {"work", w.work},
           {"frequented", w.frequented},
           {"history", history},
           {"response_hours", w.response_hours},
           {"outstanding_tasks", w.outstanding_tasks}};
}
void from_json(const json& j, WorkerProfile& w) {
  w.id = j.at("id").get<std::string>();
  w.home = j.at("home").get<GeoPoint>();
  w.work = j.at("work").get<GeoPoint>();
  w.frequented = j.at("frequented").get<GeoPoint>();
  w.history.clear();
  if (auto it = j.find("history"); it != j.end()) {
    for (const auto& [l, h] : it->items()) {
      w.history[l] = {h.value("correct", 0u), h.value("wrong", 0u)};
    }
  }
  w.response_hours = j.value("response_hours", std::vector<double>{});
  w.outstanding_tasks = j.value("outstanding_tasks", 0u);
  if (w.id.empty()) throw Error(ErrorCode::kInvalidArgument, "worker with empty id");
  for (double h : w.response_hours) {
    if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "worker " + w.id + " has a non-positive duration");
  }
  for (const GeoPoint* p : {&w.home, &w.work, &w.frequented}) {
    if (!p->valid()) throw Error(ErrorCode::kInvalidArgument, "worker " + w.id + " has invalid coordinates");
  }
}

void to_json(json& j, const RouteRequest& r) {
  j = json{{"source", r.source},
           {"destination", r.destination},
           {"departure", r.departure},
           {"deadline_hours", r.deadline_hours},
           {"requester", r.requester}};
}
void from_json(const json& j, RouteRequest& r) {
  r.source = j.at("source").get<GeoPoint>();
  r.destination = j.at("destination").get<GeoPoint>();
  r.departure = j.value("departure", Timestamp{0});
  r.deadline_hours = j.value("deadline_hours", 24.0);
  r.requester = j.value("requester", std::string());
}

void to_json(json& j, const CellId& c) { j = json::array({c.row, c.col}); }
void from_json(const json& j, CellId& c) {
  c.row = j.at(0).get<std::int64_t>();
  c.col = j.at(1).get<std::int64_t>();
}

std::string_view to_string(ResolutionMethod method) noexcept {
  switch (method) {
    case ResolutionMethod::kTruthReuse: return "truth-reuse";
    case ResolutionMethod::kAutoEval: return "auto-eval";
    case ResolutionMethod::kCrowd: return "crowd";
  }
  return "unknown";
}

ResolutionMethod parse_method(const std::string& s) {
  if (s == "truth-reuse") return ResolutionMethod::kTruthReuse;
  if (s == "auto-eval") return ResolutionMethod::kAutoEval;
  if (s == "crowd") return ResolutionMethod::kCrowd;
  throw Error(ErrorCode::kParse, "unknown resolution method " + s);
}

std::string_view to_string(TaskState state) noexcept {
  switch (state) {
    case TaskState::kCreated: return "created";
    case TaskState::kAssigned: return "assigned";
    case TaskState::kCollecting: return "collecting";
    case TaskState::kResolved: return "resolved";
    case TaskState::kExpired: return "expired";
  }
  return "unknown";
}

TaskState parse_task_state(const std::string& s) {
  if (s == "created") return TaskState::kCreated;
  if (s == "assigned") return TaskState::kAssigned;
  if (s == "collecting") return TaskState::kCollecting;
  if (s == "resolved") return TaskState::kResolved;
  if (s == "expired") return TaskState::kExpired;
  throw Error(ErrorCode::kParse, "unknown task state " + s);
}

std::string_view to_string(RequestRecord::Status status) noexcept {
  switch (status) {
    case RequestRecord::Status::kPending: return "pending";
    case RequestRecord::Status::kResolved: return "resolved";
    case RequestRecord::Status::kExpired: return "expired";
  }
  return "unknown";
}

RequestRecord::Status parse_request_status(const std::string& s) {
  if (s == "pending") return RequestRecord::Status::kPending;
  if (s == "resolved") return RequestRecord::Status::kResolved;
  if (s == "expired") return RequestRecord::Status::kExpired;
  throw Error(ErrorCode::kParse, "unknown request status " + s);
}

void to_json(json& j, const TruthRecord& t) {
  j = json{{"id", t.id},
           {"source_cell", t.source_cell},
           {"destination_cell", t.destination_cell},
           {"time_bucket", t.time_bucket},
           {"best_route", t.best_route},
           {"provenance", t.provenance},
           {"confidence", t.confidence},
           {"created_at", t.created_at},
           {"ttl_s", t.ttl_s},
           {"method", std::string(to_string(t.method))}};
}
void from_json(const json& j, TruthRecord& t) {
  t.id = j.at("id").get<std::uint64_t>();
  t.source_cell = j.at("source_cell").get<CellId>();
  t.destination_cell = j.at("destination_cell").get<CellId>();
  t.time_bucket = j.at("time_bucket").get<int>();
  t.best_route = j.at("best_route").get<LandmarkRoute>();
  t.provenance = j.value("provenance", std::vector<std::string>{});
  t.confidence = j.at("confidence").get<double>();
  t.created_at = j.at("created_at").get<Timestamp>();
  t.ttl_s = j.at("ttl_s").get<std::int64_t>();
  t.method = parse_method(j.at("method").get<std::string>());
}

void to_json(json& j, const Assignment& a) {
  j = json{{"worker", a.worker}, {"trace", a.trace}, {"assigned_at", a.assigned_at}};
  j["leaf"] = a.leaf ? json(*a.leaf) : json(nullptr);
  j["completed_at"] = a.completed_at ? json(*a.completed_at) : json(nullptr);
}
void from_json(const json& j, Assignment& a) {
  a.worker = j.at("worker").get<std::string>();
  a.trace = j.at("trace").get<AnswerTrace>();
  a.assigned_at = j.at("assigned_at").get<Timestamp>();
  a.leaf.reset();
  a.completed_at.reset();
  if (!j.at("leaf").is_null()) a.leaf = j.at("leaf").get<std::size_t>();
  if (!j.at("completed_at").is_null()) a.completed_at = j.at("completed_at").get<Timestamp>();
}

void to_json(json& j, const Task& t) {
  j = json{{"id", t.id},
           {"request_id", t.request_id},
           {"request", t.request},
           {"candidates", t.candidates},
           {"selected", t.selected},
           {"selection_value", t.selection_value},
           {"tree", json::parse(t.tree.to_json())},
           {"assignments", t.assignments},
           {"state", std::string(to_string(t.state))},
           {"shortfall", t.shortfall},
           {"early_stopped", t.early_stopped},
           {"retries", t.retries},
           {"created_at", t.created_at},
           {"deadline_at", t.deadline_at},
           {"next_retry_at", t.next_retry_at}};
  j["resolution"] = t.resolution ? json(*t.resolution) : json(nullptr);
}
void from_json(const json& j, Task& t) {
  t.id = j.at("id").get<std::uint64_t>();
  t.request_id = j.at("request_id").get<std::uint64_t>();
  t.request = j.at("request").get<RouteRequest>();
  t.candidates = j.at("candidates").get<CandidateSet>();
  t.selected = j.at("selected").get<std::vector<LandmarkId>>();
  t.selection_value = j.at("selection_value").get<double>();
  t.tree = QuestionTree::from_json(j.at("tree").dump());
  t.assignments = j.at("assignments").get<std::vector<Assignment>>();
  t.state = parse_task_state(j.at("state").get<std::string>());
  t.shortfall = j.at("shortfall").get<bool>();
  t.early_stopped = j.at("early_stopped").get<bool>();
  t.retries = j.at("retries").get<std::uint32_t>();
  t.created_at = j.at("created_at").get<Timestamp>();
  t.deadline_at = j.at("deadline_at").get<Timestamp>();
  t.next_retry_at = j.at("next_retry_at").get<Timestamp>();
  t.resolution.reset();
  if (!j.at("resolution").is_null()) t.resolution = j.at("resolution").get<std::size_t>();
}

void to_json(json& j, const RequestRecord& r) {
  j = json{{"id", r.id},
           {"request", r.request},
           {"status", std::string(to_string(r.status))},
           {"provenance", r.provenance},
           {"confidence", r.confidence},
           {"confidences", r.confidences},
           {"submitted_at", r.submitted_at}};
  j["method"] = r.method ? json(std::string(to_string(*r.method))) : json(nullptr);
  j["route"] = r.route ? json(*r.route) : json(nullptr);
  j["task_id"] = r.task_id ? json(*r.task_id) : json(nullptr);
  j["resolved_at"] = r.resolved_at ? json(*r.resolved_at) : json(nullptr);
}
void from_json(const json& j, RequestRecord& r) {
  r.id = j.at("id").get<std::uint64_t>();
  r.request = j.at("request").get<RouteRequest>();
  r.status = parse_request_status(j.at("status").get<std::string>());
  r.provenance = j.at("provenance").get<std::vector<std::string>>();
  r.confidence = j.at("confidence").get<double>();
  r.confidences = j.at("confidences").get<std::vector<double>>();
  r.submitted_at = j.at("submitted_at").get<Timestamp>();
  r.method.reset();
  r.route.reset();
  r.task_id.reset();
  r.resolved_at.reset();
  if (!j.at("method").is_null()) r.method = parse_method(j.at("method").get<std::string>());
  if (!j.at("route").is_null()) r.route = j.at("route").get<LandmarkRoute>();
  if (!j.at("task_id").is_null()) r.task_id = j.at("task_id").get<std::uint64_t>();
  if (!j.at("resolved_at").is_null()) r.resolved_at = j.at("resolved_at").get<Timestamp>();
}

void to_json(json& j, const CandidateInput& c) {
  j = json{{"source", c.source}};
  if (!c.landmarks.empty()) j["landmarks"] = c.landmarks;
  if (!c.points.empty()) j["points"] = c.points;
}
void from_json(const json& j, CandidateInput& c) {
  c.source = j.value("source", std::string());
  c.landmarks = j.value("landmarks", std::vector<LandmarkId>{});
  c.points = j.value("points", std::vector<GeoPoint>{});
}

void to_json(json& j, const ScoreMatrix& m) {
  json entries = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (const auto& [col, v] : m.row(i)) entries.push_back(json::array({i, col, v}));
  }
  j = json{{"workers", m.workers()}, {"landmarks", m.landmarks()}, {"entries", entries}};
}

AccumulatedMatrix accumulated_from_json(const json& j) {
  AccumulatedMatrix m(j.at("workers").get<std::vector<WorkerId>>(), j.at("landmarks").get<std::vector<LandmarkId>>());
  for (const auto& e : j.at("entries")) {
    const auto i = e.at(0).get<std::size_t>();
    if (i >= m.rows()) throw Error(ErrorCode::kParse, "matrix row out of range");
    m.set(i, e.at(1).get<std::size_t>(), e.at(2).get<double>());
  }
  return m;
}

}  // namespace crowdroute
