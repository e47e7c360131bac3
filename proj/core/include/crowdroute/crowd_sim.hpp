#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdroute/config.hpp"
#include "crowdroute/kv_store.hpp"
#include "crowdroute/task_service.hpp"

namespace crowdroute::sim {

struct WorldSizes {
  std::size_t landmarks = 36;
  std::size_t workers = 24;
  std::size_t requests = 8;
};

inline constexpr std::size_t kMaxLandmarks = 500;
inline constexpr std::size_t kMaxWorkers = 200;
inline constexpr std::size_t kMaxRequests = 50;

struct SimRequest {
  RouteRequest request;
  std::vector<CandidateInput> candidates;  // landmark-id routes, 2 to 6
  std::size_t truth = 0;                   // index of the preferred route
  friend bool operator==(const SimRequest&, const SimRequest&);
};

struct World {
  std::uint64_t seed = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<Landmark> landmarks;  // significances from the check-ins
  std::vector<VisitEvent> checkins;
  std::vector<WorkerProfile> workers;
  std::vector<SimRequest> requests;
  friend bool operator==(const World&, const World&);
};

// Lattice of landmarks 1 km apart (plus scattered extras), travellers whose
// check-ins drive significance, workers living in neighbourhoods along the
// request corridors, and per request a few monotone lattice paths between two
// lattice corners with one designated as preferred. Throws kTooLarge past
// the size guards.
World generate_world(std::uint64_t seed, const WorldSizes& sizes);

// Probability that a worker answers a membership question truthfully.
struct BehaviorModel {
  enum class Kind { kConstant, kFamiliarity };
  Kind kind = Kind::kConstant;
  double accuracy = 1.0;  // kConstant, in [0.5, 1]
  double slope = 1.0;     // kFamiliarity: 0.5 + 0.5 * (1 - exp(-slope * F))

  static BehaviorModel constant(double accuracy);
  static BehaviorModel familiarity(double slope);
  double accuracy_for(double familiarity) const;
};

struct ScenarioConfig {
  EngineConfig engine;
  std::uint64_t seed = 7;           // answer and delay draws
  Timestamp start = 1'700'000'000;  // logical clock origin
  bool repeat_requests = true;      // resubmit each request after resolution
};

struct RequestRow {
  std::size_t index = 0;  // into World::requests
  bool repeat = false;    // resubmission of an already resolved request
  std::uint64_t request_id = 0;
  std::string status;
  std::optional<ResolutionMethod> method;
  std::optional<std::size_t> resolved;  // candidate index
  std::size_t truth = 0;
  bool correct = false;
  std::size_t candidates = 0;
  std::size_t selected = 0;
  std::size_t tree_depth = 0;
  std::size_t truth_leaf_depth = 0;
  std::size_t workers = 0;
  bool shortfall = false;
  bool early_stopped = false;
  std::map<WorkerId, std::size_t> questions;  // answers recorded per worker
};

struct ScenarioSummary {
  std::size_t requests = 0;
  std::size_t resolved = 0;
  std::size_t truth_reuse = 0;
  std::size_t auto_eval = 0;
  std::size_t crowd = 0;
  std::size_t crowd_correct = 0;
  std::size_t early_stops = 0;
  std::size_t answers = 0;
  friend bool operator==(const ScenarioSummary&, const ScenarioSummary&) = default;
};

struct ScenarioReport {
  std::vector<RequestRow> rows;
  ScenarioSummary summary;
  std::vector<LoggedEvent> events;
};

// Drives every request through an in-process TaskService on one logical
// clock. Each assigned worker answers its whole question sequence at a delay
// drawn from its response rate; workers are processed in completion order.
ScenarioReport run_scenario(const World& world, const BehaviorModel& behavior, const ScenarioConfig& config,
                            std::shared_ptr<KvStore> store = nullptr);

// Rebuilds the summary from the event log alone. `truth_by_request` maps a
// request id to its preferred candidate index.
ScenarioSummary summarize_events(std::span<const LoggedEvent> events,
                                 const std::map<std::uint64_t, std::size_t>& truth_by_request);

std::string format_rows(const ScenarioReport& report);  // tab-separated
std::string format_summary(const ScenarioSummary& summary);

}  // namespace crowdroute::sim
