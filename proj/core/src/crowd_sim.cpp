#include "crowdroute/crowd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "codec.hpp"
#include "crowdroute/error.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/worker_select.hpp"

namespace crowdroute::sim {

namespace {

constexpr GeoPoint kOrigin{39.90, 116.40};
constexpr Timestamp kWorldEpoch = 1'700'000'000;

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// All monotone lattice paths between two grid points, as (row, col) sequences.
void lattice_paths(std::ptrdiff_t r, std::ptrdiff_t c, std::ptrdiff_t r2, std::ptrdiff_t c2,
                   std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>>& prefix,
                   std::vector<std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>>>& out) {
  prefix.emplace_back(r, c);
  if (r == r2 && c == c2) {
    out.push_back(prefix);
  } else {
    if (r != r2) lattice_paths(r + (r2 > r ? 1 : -1), c, r2, c2, prefix, out);
    if (c != c2) lattice_paths(r, c + (c2 > c ? 1 : -1), r2, c2, prefix, out);
  }
  prefix.pop_back();
}

bool same(const GeoPoint& a, const GeoPoint& b) { return a.lat == b.lat && a.lon == b.lon; }

bool same(const Landmark& a, const Landmark& b) {
  return a.id == b.id && a.name == b.name && same(a.location, b.location) && a.significance == b.significance;
}

bool same(const VisitEvent& a, const VisitEvent& b) {
  return a.traveller == b.traveller && a.landmark == b.landmark && a.timestamp == b.timestamp && a.weight == b.weight;
}

bool same(const CandidateInput& a, const CandidateInput& b) {
  return a.source == b.source && a.landmarks == b.landmarks &&
         std::equal(a.points.begin(), a.points.end(), b.points.begin(), b.points.end(),
                    [](const GeoPoint& x, const GeoPoint& y) { return same(x, y); });
}

template <typename T>
bool all_same(const std::vector<T>& a, const std::vector<T>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const T& x, const T& y) { return same(x, y); });
}

}  // namespace

bool operator==(const SimRequest& a, const SimRequest& b) {
  const auto& x = a.request;
  const auto& y = b.request;
  return same(x.source, y.source) && same(x.destination, y.destination) && x.departure == y.departure &&
         x.deadline_hours == y.deadline_hours && x.requester == y.requester && all_same(a.candidates, b.candidates) &&
         a.truth == b.truth;
}

bool operator==(const World& a, const World& b) {
  return a.seed == b.seed && a.grid_rows == b.grid_rows && a.grid_cols == b.grid_cols &&
         all_same(a.landmarks, b.landmarks) && all_same(a.checkins, b.checkins) && a.workers == b.workers &&
         a.requests == b.requests;
}

World generate_world(std::uint64_t seed, const WorldSizes& sizes) {
  if (sizes.landmarks > kMaxLandmarks || sizes.workers > kMaxWorkers || sizes.requests > kMaxRequests) {
    throw Error(ErrorCode::kTooLarge, "world sizes exceed 500 landmarks / 200 workers / 50 requests");
  }
  if (sizes.landmarks < 4) throw Error(ErrorCode::kInvalidArgument, "a world needs at least 4 landmarks");

  std::mt19937_64 rng(seed);
  World world;
  world.seed = seed;
  world.grid_cols = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(sizes.landmarks))));
  world.grid_rows = sizes.landmarks / world.grid_cols;
  const std::size_t lattice = world.grid_rows * world.grid_cols;

  for (std::size_t i = 0; i < sizes.landmarks; ++i) {
    Landmark l;
    l.id = make_id("L", i);
    l.name = "Landmark " + std::to_string(i);
    if (i < lattice) {
      const double north = static_cast<double>(i / world.grid_cols) + uniform(rng, -0.05, 0.05);
      const double east = static_cast<double>(i % world.grid_cols) + uniform(rng, -0.05, 0.05);
      l.location = offset_km(kOrigin, north, east);
    } else {
      l.location = offset_km(kOrigin, uniform(rng, 0.0, static_cast<double>(world.grid_rows - 1)),
                             uniform(rng, 0.0, static_cast<double>(world.grid_cols - 1)));
    }
    world.landmarks.push_back(std::move(l));
  }

  // Check-ins with a skewed popularity so that significance varies.
  std::vector<double> popularity(sizes.landmarks);
  std::vector<std::size_t> order(sizes.landmarks);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    popularity[order[rank]] = 1.0 / std::pow(static_cast<double>(rank + 1), 0.9);
  }
  std::discrete_distribution<std::size_t> visit(popularity.begin(), popularity.end());
  const std::size_t travellers = std::max<std::size_t>(10, sizes.landmarks / 2);
  for (std::size_t t = 0; t < travellers; ++t) {
    const std::size_t visits = pick(rng, 5, 15);
    for (std::size_t v = 0; v < visits; ++v) {
      world.checkins.push_back({make_id("T", t), world.landmarks[visit(rng)].id,
                                kWorldEpoch - static_cast<Timestamp>(pick(rng, 0, 90 * 86400)), 1.0});
    }
  }
  {
    const LandmarkIndex index(world.landmarks);
    const auto result = infer_significance(VisitGraph::build(world.checkins, index));
    for (auto& l : world.landmarks) {
      auto it = result.scores.find(l.id);
      l.significance = it == result.scores.end() ? 0.0 : it->second;
    }
  }

  // Requests between lattice corners that admit at least two monotone paths.
  const auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    return static_cast<std::size_t>(r) * world.grid_cols + static_cast<std::size_t>(c);
  };
  std::set<std::pair<std::size_t, std::size_t>> used;
  const auto max_dr = std::min<std::ptrdiff_t>(3, static_cast<std::ptrdiff_t>(world.grid_rows) - 1);
  const auto max_dc = std::min<std::ptrdiff_t>(3, static_cast<std::ptrdiff_t>(world.grid_cols) - 1);
  for (std::size_t q = 0; q < sizes.requests; ++q) {
    bool placed = false;
    for (int attempt = 0; attempt < 10'000 && !placed; ++attempt) {
      const auto r1 = static_cast<std::ptrdiff_t>(pick(rng, 0, world.grid_rows - 1));
      const auto c1 = static_cast<std::ptrdiff_t>(pick(rng, 0, world.grid_cols - 1));
      const auto dr = static_cast<std::ptrdiff_t>(pick(rng, 1, static_cast<std::size_t>(max_dr)));
      const auto dc = static_cast<std::ptrdiff_t>(pick(rng, 1, static_cast<std::size_t>(max_dc)));
      const auto r2 = r1 + (pick(rng, 0, 1) ? dr : -dr);
      const auto c2 = c1 + (pick(rng, 0, 1) ? dc : -dc);
      if (r2 < 0 || c2 < 0 || r2 >= static_cast<std::ptrdiff_t>(world.grid_rows) ||
          c2 >= static_cast<std::ptrdiff_t>(world.grid_cols)) {
        continue;
      }
      const auto o = at(r1, c1);
      const auto d = at(r2, c2);
      if (used.count({o, d}) || used.count({d, o})) continue;
      used.insert({o, d});
      placed = true;

      std::vector<std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>>> paths;
      std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> prefix;
      lattice_paths(r1, c1, r2, c2, prefix, paths);
      std::shuffle(paths.begin(), paths.end(), rng);
      const std::size_t m = std::min(pick(rng, 2, 6), paths.size());

      SimRequest req;
      req.request.source = world.landmarks[o].location;
      req.request.destination = world.landmarks[d].location;
      req.request.departure = kWorldEpoch + static_cast<Timestamp>(pick(rng, 1, 28) * 86400 + pick(rng, 6, 22) * 3600);
      req.request.deadline_hours = 24.0;
      req.request.requester = make_id("R", q);
      for (std::size_t p = 0; p < m; ++p) {
        CandidateInput cand;
        cand.source = "cand" + std::to_string(p);
        for (const auto& [r, c] : paths[p]) cand.landmarks.push_back(world.landmarks[at(r, c)].id);
        req.candidates.push_back(std::move(cand));
      }
      req.truth = pick(rng, 0, m - 1);
      world.requests.push_back(std::move(req));
    }
    if (!placed) {
      throw Error(ErrorCode::kInfeasible, "lattice too small for " + std::to_string(sizes.requests) +
                                              " distinct origin-destination pairs");
    }
  }

  // Workers live around a landmark of some request corridor.
  for (std::size_t w = 0; w < sizes.workers; ++w) {
    WorkerProfile p;
    p.id = make_id("W", w);
    std::vector<LandmarkId> corridor;
    if (!world.requests.empty()) {
      std::set<LandmarkId> ids;
      for (const auto& c : world.requests[w % world.requests.size()].candidates) ids.insert(c.landmarks.begin(), c.landmarks.end());
      corridor.assign(ids.begin(), ids.end());
    } else {
      corridor.push_back(world.landmarks[pick(rng, 0, sizes.landmarks - 1)].id);
    }
    const auto& anchor_id = corridor[pick(rng, 0, corridor.size() - 1)];
    const auto anchor = std::find_if(world.landmarks.begin(), world.landmarks.end(),
                                     [&](const Landmark& l) { return l.id == anchor_id; })->location;
    p.home = offset_km(anchor, uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    p.work = offset_km(anchor, uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    p.frequented = offset_km(anchor, uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    const std::size_t known = pick(rng, 0, std::min<std::size_t>(4, corridor.size()));
    for (std::size_t h = 0; h < known; ++h) {
      auto& entry = p.history[corridor[pick(rng, 0, corridor.size() - 1)]];
      entry.correct += static_cast<std::uint32_t>(pick(rng, 0, 5));
      entry.wrong += static_cast<std::uint32_t>(pick(rng, 0, 2));
    }
    const double mean_hours = uniform(rng, 1.0, 8.0);
    std::exponential_distribution<double> delay(1.0 / mean_hours);
    const std::size_t samples = pick(rng, 3, 8);
    for (std::size_t s = 0; s < samples; ++s) p.response_hours.push_back(delay(rng));
    world.workers.push_back(std::move(p));
  }
  return world;
}

BehaviorModel BehaviorModel::constant(double accuracy) {
  if (!(accuracy >= 0.5 && accuracy <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "accuracy must be in [0.5, 1]");
  return {Kind::kConstant, accuracy, 0.0};
}

BehaviorModel BehaviorModel::familiarity(double slope) {
  if (!(slope >= 0.0) || !std::isfinite(slope)) throw Error(ErrorCode::kInvalidArgument, "slope must be finite and >= 0");
  return {Kind::kFamiliarity, 1.0, slope};
}

double BehaviorModel::accuracy_for(double f) const {
  if (kind == Kind::kConstant) return accuracy;
  return 0.5 + 0.5 * (1.0 - std::exp(-slope * std::max(f, 0.0)));
}

namespace {

class Runner {
 public:
  Runner(const World& world, const BehaviorModel& behavior, const ScenarioConfig& config, std::shared_ptr<KvStore> store)
      : world_(world),
        behavior_(behavior),
        config_(config),
        clock_(config.start),
        rng_(config.seed ^ (world.seed * 0x9E3779B97F4A7C15ULL)),
        service_(config.engine, store ? std::move(store) : KvStore::open(":memory:"), [this] { return clock_; }) {}

  ScenarioReport run() {
    service_.ingest_landmarks(world_.landmarks);
    service_.ingest_checkins(world_.checkins);
    service_.ingest_workers(world_.workers);
    service_.retrain();
    accumulated_ = service_.accumulated();

    ScenarioReport report;
    for (std::size_t i = 0; i < world_.requests.size(); ++i) {
      clock_ += 3600;
      report.rows.push_back(process(i, false));
      if (config_.repeat_requests && report.rows.back().status == "resolved") {
        clock_ += 60;
        report.rows.push_back(process(i, true));
      }
    }
    report.events = service_.events();
    report.summary = summarize(report.rows);
    return report;
  }

 private:
  RequestRow process(std::size_t i, bool repeat) {
    const auto& sim = world_.requests[i];
    RequestRow row;
    row.index = i;
    row.repeat = repeat;
    row.truth = sim.truth;
    row.candidates = sim.candidates.size();
    const auto record = service_.submit(sim.request, sim.candidates);
    row.request_id = record.id;
    if (record.task_id) drive(*record.task_id, sim);
    const auto final_record = service_.request(record.id);
    row.status = std::string(to_string(final_record.status));
    row.method = final_record.method;
    if (record.task_id) {
      const Task task = service_.task(*record.task_id);
      row.selected = task.selected.size();
      row.tree_depth = task.tree.depth();
      if (auto t = truth_index(task.candidates, sim)) row.truth_leaf_depth = task.tree.depth_of(*t);
      row.workers = task.assignments.size();
      row.shortfall = task.shortfall;
      row.early_stopped = task.early_stopped;
      for (const auto& a : task.assignments) row.questions[a.worker] = a.trace.size();
    }
    if (final_record.route) {
      for (std::size_t c = 0; c < sim.candidates.size(); ++c) {
        if (LandmarkRoute(sim.candidates[c].landmarks).membership() == final_record.route->membership()) {
          row.resolved = c;
        }
      }
      row.correct = row.resolved == sim.truth;
    }
    return row;
  }

  static std::optional<std::size_t> truth_index(const CandidateSet& set, const SimRequest& sim) {
    const auto membership = LandmarkRoute(sim.candidates[sim.truth].landmarks).membership();
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.membership(i) == membership) return i;
    }
    return std::nullopt;
  }

  double familiarity(const WorkerId& w, const LandmarkId& l) const {
    if (!accumulated_.has_row(w) || !accumulated_.has_col(l)) return 0.0;
    return accumulated_.get(w, l);
  }

  // Plays out one task: assignment retries, worker answers in completion
  // order, then the deadline.
  void drive(std::uint64_t task_id, const SimRequest& sim) {
    const LandmarkRoute preferred(sim.candidates[sim.truth].landmarks);
    Task task = service_.task(task_id);
    while (task.state == TaskState::kCreated && task.next_retry_at < task.deadline_at) {
      clock_ = std::max(clock_, task.next_retry_at);
      service_.tick();
      task = service_.task(task_id);
    }

    struct Turn {
      Timestamp at;
      WorkerId worker;
    };
    std::vector<Turn> turns;
    for (const auto& a : task.assignments) {
      const auto& hours = service_.worker(a.worker).response_hours;
      const auto model = estimate_lambda(hours, config_.engine.eligibility.default_lambda);
      const double delay_h = std::exponential_distribution<double>(model.lambda)(rng_);
      turns.push_back({a.assigned_at + std::max<Timestamp>(1, static_cast<Timestamp>(std::llround(delay_h * 3600.0))),
                       a.worker});
    }
    std::sort(turns.begin(), turns.end(),
              [](const Turn& x, const Turn& y) { return std::tie(x.at, x.worker) < std::tie(y.at, y.worker); });

    for (const auto& turn : turns) {
      if (turn.at >= task.deadline_at) break;
      clock_ = std::max(clock_, turn.at);
      try {
        for (;;) {
          const auto prompt = service_.next_question(task_id, turn.worker);
          if (prompt.finished) break;
          const bool truthful = preferred.contains(prompt.landmark);
          const double acc = behavior_.accuracy_for(familiarity(turn.worker, prompt.landmark));
          const bool keep = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < acc;
          service_.record_answer(task_id, turn.worker, prompt.landmark, keep ? truthful : !truthful);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTaskClosed) throw;
      }
    }
    task = service_.task(task_id);
    if (task.state != TaskState::kResolved && task.state != TaskState::kExpired) {
      clock_ = std::max(clock_, task.deadline_at);
      service_.tick();
    }
  }

  ScenarioSummary summarize(const std::vector<RequestRow>& rows) const {
    ScenarioSummary s;
    const auto count = [&s](const std::optional<ResolutionMethod>& m) {
      if (!m) return;
      ++s.resolved;
      if (*m == ResolutionMethod::kTruthReuse) ++s.truth_reuse;
      if (*m == ResolutionMethod::kAutoEval) ++s.auto_eval;
      if (*m == ResolutionMethod::kCrowd) ++s.crowd;
    };
    for (const auto& r : rows) {
      ++s.requests;
      count(r.method);
      if (r.method == ResolutionMethod::kCrowd && r.correct) ++s.crowd_correct;
      s.early_stops += r.early_stopped ? 1 : 0;
      for (const auto& [w, q] : r.questions) s.answers += q;
    }
    return s;
  }

  const World& world_;
  const BehaviorModel& behavior_;
  const ScenarioConfig& config_;
  Timestamp clock_;
  std::mt19937_64 rng_;
  TaskService service_;
  AccumulatedMatrix accumulated_;
};

}  // namespace

ScenarioReport run_scenario(const World& world, const BehaviorModel& behavior, const ScenarioConfig& config,
                            std::shared_ptr<KvStore> store) {
  Runner runner(world, behavior, config, std::move(store));
  return runner.run();
}

ScenarioSummary summarize_events(std::span<const LoggedEvent> events,
                                 const std::map<std::uint64_t, std::size_t>& truth_by_request) {
  ScenarioSummary s;
  for (const auto& e : events) {
    const auto j = json::parse(e.json);
    const auto type = j.at("type").get<std::string>();
    if (type == "request_submitted") {
      ++s.requests;
    } else if (type == "request_resolved") {
      ++s.resolved;
      const auto method = parse_method(j.at("method").get<std::string>());
      if (method == ResolutionMethod::kTruthReuse) ++s.truth_reuse;
      if (method == ResolutionMethod::kAutoEval) ++s.auto_eval;
      if (method == ResolutionMethod::kCrowd) {
        ++s.crowd;
        auto it = truth_by_request.find(j.at("request").get<std::uint64_t>());
        if (it != truth_by_request.end() && j.at("route").get<std::size_t>() == it->second) ++s.crowd_correct;
      }
    } else if (type == "early_stop") {
      ++s.early_stops;
    } else if (type == "answer") {
      ++s.answers;
    }
  }
  return s;
}

std::string format_rows(const ScenarioReport& report) {
  std::ostringstream out;
  out << "index\trepeat\trequest\tstatus\tmethod\tresolved\ttruth\tcorrect\tcandidates\tselected\ttree_depth\t"
         "truth_leaf_depth\tworkers\tshortfall\tearly_stop\tquestions\n";
  for (const auto& r : report.rows) {
    std::string questions;
    for (const auto& [w, q] : r.questions) questions += (questions.empty() ? "" : ",") + w + ":" + std::to_string(q);
    out << r.index << '\t' << (r.repeat ? 1 : 0) << '\t' << r.request_id << '\t' << r.status << '\t' << (r.method ? to_string(*r.method) : "-")
        << '\t' << (r.resolved ? std::to_string(*r.resolved) : "-") << '\t' << r.truth << '\t' << (r.correct ? 1 : 0)
        << '\t' << r.candidates << '\t' << r.selected << '\t' << r.tree_depth << '\t' << r.truth_leaf_depth << '\t'
        << r.workers << '\t' << (r.shortfall ? 1 : 0) << '\t' << (r.early_stopped ? 1 : 0) << '\t'
        << (questions.empty() ? "-" : questions) << '\n';
  }
  return out.str();
}

std::string format_summary(const ScenarioSummary& s) {
  std::ostringstream out;
  out << "requests\t" << s.requests << "\nresolved\t" << s.resolved << "\ntruth_reuse\t" << s.truth_reuse
      << "\nauto_eval\t" << s.auto_eval << "\ncrowd\t" << s.crowd << "\ncrowd_correct\t" << s.crowd_correct
      << "\nearly_stops\t" << s.early_stops << "\nanswers\t" << s.answers << '\n';
  return out.str();
}

}  // namespace crowdroute::sim
