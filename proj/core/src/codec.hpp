#pragma once

// nlohmann::json conversions for the domain types. Private to the library:
// the public headers stay free of the JSON dependency.

#include "crowdroute/model.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/task_service.hpp"
#include "crowdroute/worker_model.hpp"
#include "json.hpp"

namespace crowdroute {

using json = nlohmann::json;

void to_json(json& j, const GeoPoint& p);
void from_json(const json& j, GeoPoint& p);
void to_json(json& j, const Landmark& l);
void from_json(const json& j, Landmark& l);
void to_json(json& j, const LandmarkRoute& r);
void from_json(const json& j, LandmarkRoute& r);
void to_json(json& j, const CandidateSet& c);
void from_json(const json& j, CandidateSet& c);
void to_json(json& j, const Answer& a);
void from_json(const json& j, Answer& a);
void to_json(json& j, const WorkerProfile& w);
void from_json(const json& j, WorkerProfile& w);
void to_json(json& j, const RouteRequest& r);
void from_json(const json& j, RouteRequest& r);
void to_json(json& j, const CellId& c);
void from_json(const json& j, CellId& c);
void to_json(json& j, const TruthRecord& t);
void from_json(const json& j, TruthRecord& t);
void to_json(json& j, const Assignment& a);
void from_json(const json& j, Assignment& a);
void to_json(json& j, const Task& t);
void from_json(const json& j, Task& t);
void to_json(json& j, const RequestRecord& r);
void from_json(const json& j, RequestRecord& r);
void to_json(json& j, const CandidateInput& c);
void from_json(const json& j, CandidateInput& c);
void to_json(json& j, const ScoreMatrix& m);
AccumulatedMatrix accumulated_from_json(const json& j);

ResolutionMethod parse_method(const std::string& s);
TaskState parse_task_state(const std::string& s);
RequestRecord::Status parse_request_status(const std::string& s);

}  // namespace crowdroute
