#include <atomic>
#include <thread>

#include "crowdroute/error.hpp"
#include "crowdroute/task_service.hpp"
#include "doctest.h"
#include "service_fixture.hpp"

using namespace crowdroute;
using fixture::Env;

namespace {

LandmarkSet members(const CandidateInput& c) { return {c.landmarks.begin(), c.landmarks.end()}; }

Task voting_task(std::size_t k, const std::vector<std::optional<std::size_t>>& leaves) {
  Task t;
  for (std::size_t i = 0; i < k; ++i) {
    Assignment a;
    a.worker = "w" + std::to_string(i);
    if (i < leaves.size() && leaves[i]) {
      a.leaf = leaves[i];
      a.completed_at = static_cast<Timestamp>(100 + i);
    }
    t.assignments.push_back(a);
  }
  return t;
}

TruthRecord truth_for(const RouteRequest& r, const std::vector<LandmarkId>& route, Timestamp created, double cell_km = 0.5) {
  TruthRecord t;
  t.source_cell = cell_of(r.source, cell_km);
  t.destination_cell = cell_of(r.destination, cell_km);
  t.time_bucket = hour_of_week(r.departure);
  t.best_route = LandmarkRoute(route);
  t.confidence = 1.0;
  t.created_at = created;
  t.ttl_s = 3600;
  return t;
}

}  // namespace

TEST_SUITE("task-service") {
  TEST_CASE("time buckets and cells") {
    CHECK(hour_of_week(0) == 72);            // Thursday 00:00 UTC
    CHECK(hour_of_week(4 * 86400) == 0);     // Monday 1970-01-05
    CHECK(hour_of_week(4 * 86400 - 1) == 167);
    CHECK(hour_of_week(-1) == 71);
    const GeoPoint p{31.23, 121.47};
    CHECK(cell_of(p, 0.5) == cell_of(offset_km(p, 0.0, 0.0), 0.5));
    CHECK_FALSE(cell_of(p, 0.5) == cell_of(offset_km(p, 0.6, 0.0), 0.5));
    CHECK_FALSE(cell_of(p, 0.5) == cell_of(offset_km(p, 0.0, 0.6), 0.5));
  }

  TEST_CASE("truth reuse rules") {
    const auto req = fixture::corner_request();
    const std::vector<TruthRecord> truths{truth_for(req, {"a", "b"}, 1000)};
    CHECK(reuse_truth(req, truths, 0.5, 1000 + 10).has_value());
    CHECK_FALSE(reuse_truth(req, truths, 0.5, 1000 + 3600).has_value());  // age == ttl
    auto other_hour = req;
    other_hour.departure += 3600;
    CHECK_FALSE(reuse_truth(other_hour, truths, 0.5, 1010).has_value());
    auto same_hour_next_week = req;
    same_hour_next_week.departure += 7 * 86400;
    CHECK(reuse_truth(same_hour_next_week, truths, 0.5, 1010).has_value());
    auto moved = req;
    moved.destination = offset_km(req.destination, 2.0, 0.0);
    CHECK_FALSE(reuse_truth(moved, truths, 0.5, 1010).has_value());
    auto both = truths;
    both.push_back(truth_for(req, {"c"}, 1500));
    both.back().id = 9;
    CHECK(reuse_truth(req, both, 0.5, 1600)->id == 9);
  }

  TEST_CASE("candidate evaluation") {
    const auto same = CandidateSet({{"a", LandmarkRoute({"x", "y"})},
                                    {"b", LandmarkRoute({"y", "x"})},
                                    {"c", LandmarkRoute({"x", "y", "x"})},
                                    {"d", LandmarkRoute({"x", "y"})}});
    const auto unanimous = evaluate_candidates(same, {}, 0.8, 0.8);
    CHECK(unanimous.resolved);
    CHECK(unanimous.by_agreement);
    CHECK(unanimous.confidence == 1.0);

    const auto disjoint = CandidateSet({{"a", LandmarkRoute({"p"})}, {"b", LandmarkRoute({"q"})}});
    const auto esc = evaluate_candidates(disjoint, {}, 0.8, 0.8);
    CHECK_FALSE(esc.resolved);
    CHECK(esc.confidences == std::vector<double>{0.0, 0.0});

    std::vector<LandmarkId> ten, nine;
    for (int i = 0; i < 10; ++i) ten.push_back("t" + std::to_string(i));
    nine.assign(ten.begin(), ten.end() - 1);
    const auto near = CandidateSet({{"a", LandmarkRoute({"p", "q"})}, {"b", LandmarkRoute(nine)}});
    std::vector<TruthRecord> truths{truth_for(fixture::corner_request(), ten, 0)};
    const auto hit = evaluate_candidates(near, truths, 0.8, 0.8);
    CHECK(hit.resolved);
    CHECK_FALSE(hit.by_agreement);
    CHECK(hit.route == 1);
    CHECK(hit.confidence == doctest::Approx(0.9).epsilon(1e-15));
    CHECK_FALSE(evaluate_candidates(near, truths, 0.9, 0.8).resolved);  // strictly greater

    // two of three proposals agree closely
    std::vector<LandmarkId> nine_b = nine;
    nine_b.back() = "t9";
    const auto cluster = CandidateSet({{"a", LandmarkRoute(ten)}, {"b", LandmarkRoute(nine)}, {"c", LandmarkRoute({"zz"})}});
    const auto agreed = evaluate_candidates(cluster, {}, 0.8, 0.8);
    CHECK(agreed.resolved);
    CHECK(agreed.by_agreement);
    CHECK(agreed.route == 0);
    CHECK(jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("early stop rule") {
    std::vector<std::optional<std::size_t>> five_a(5, 0);
    five_a.push_back(1);
    CHECK(early_stop_check(voting_task(8, five_a), 0.6, 3) == std::optional<std::size_t>(0));
    std::vector<std::optional<std::size_t>> four_a(4, 0);
    CHECK_FALSE(early_stop_check(voting_task(8, four_a), 0.6, 3).has_value());
    CHECK_FALSE(early_stop_check(voting_task(8, {}), 0.6, 3).has_value());
    CHECK_FALSE(early_stop_check(voting_task(8, {0, 0, 0, 1, 1, 1}), 0.6, 3).has_value());
    CHECK_FALSE(early_stop_check(voting_task(2, {0, 0}), 0.6, 3).has_value());  // floor
  }

  TEST_CASE("plurality and rewards") {
    auto t = voting_task(4, {1, 0, 0, 1});
    CHECK(plurality(t) == std::optional<std::size_t>(1));  // tie: first vote was for route 1
    CHECK(plurality(voting_task(3, {2, 0, 0})) == std::optional<std::size_t>(0));
    CHECK_FALSE(plurality(voting_task(2, {})).has_value());

    Assignment a;
    a.trace = {{"x", true}, {"y", false}, {"z", true}};
    a.leaf = 0;
    CHECK(reward_points(a, 0) == 6);
    a.trace.pop_back();
    CHECK(reward_points(a, 1) == 3);
    a.leaf.reset();
    CHECK(reward_points(a, 0) == 0);
  }

  TEST_CASE("escalation, early stop, resolution, reuse") {
    Env env;
    env.seed(6);
    const auto paths = fixture::two_paths();
    auto req = fixture::corner_request();
    env.now += 60;
    const auto rec = env.service->submit(req, paths);
    CHECK(rec.status == RequestRecord::Status::kPending);
    REQUIRE(rec.task_id);
    auto task = env.service->task(*rec.task_id);
    CHECK(task.state == TaskState::kAssigned);
    CHECK(task.selected.size() == 1);
    CHECK(task.tree.depth() == 1);
    CHECK(task.assignments.size() == env.service->config().eligibility.k);
    CHECK_FALSE(task.shortfall);

    // each assigned worker's quota went up by one
    for (const auto& a : task.assignments) CHECK(env.service->worker(a.worker).outstanding_tasks == 1);

    const auto truth = members(paths[1]);
    std::vector<WorkerId> order;
    for (const auto& a : task.assignments) order.push_back(a.worker);
    env.now += 1800;
    CHECK(env.answer_as(task.id, order[0], truth) == 1);
    env.now += 60;
    env.answer_as(task.id, order[1], truth);
    CHECK(env.service->task(task.id).state == TaskState::kCollecting);
    env.now += 60;
    env.answer_as(task.id, order[2], truth);  // third vote of five: early stop
    task = env.service->task(task.id);
    CHECK(task.state == TaskState::kResolved);
    CHECK(task.early_stopped);
    CHECK(task.resolution == std::optional<std::size_t>(1));

    const auto resolved = env.service->request(rec.id);
    CHECK(resolved.status == RequestRecord::Status::kResolved);
    CHECK(resolved.method == ResolutionMethod::kCrowd);
    CHECK(resolved.route->membership() == truth);
    CHECK(resolved.provenance == std::vector<std::string>{"taxi"});
    CHECK(resolved.confidence == 1.0);

    const auto truths = env.service->truths();
    REQUIRE(truths.size() == 1);
    CHECK(truths[0].confidence == 1.0);
    CHECK(truths[0].method == ResolutionMethod::kCrowd);

    // rewards: 1 + 1 question + 2 agreement for each completer, 0 for the rest
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(env.service->reward_balance(order[i]) == (i < 3 ? 4u : 0u));
      CHECK(env.service->worker(order[i]).outstanding_tasks == 0);
    }
    // histories: the answered landmark is judged against the resolved route
    const auto asked = task.tree.nodes()[task.tree.root()].landmark;
    const auto before = fixture::service_workers(6);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& w = env.service->worker(order[i]);
      const auto idx = static_cast<std::size_t>(std::stoi(order[i].substr(1)));
      const auto prior = before[idx].history.count(asked) ? before[idx].history.at(asked).correct : 0u;
      CHECK(w.history.at(asked).correct == prior + 1);
    }
    // late answers bounce
    CHECK_THROWS_AS(env.service->record_answer(task.id, order[3], asked, true), Error);
    try {
      env.service->next_question(task.id, order[4]);
      FAIL("expected TaskClosed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTaskClosed);
    }

    // identical request right after: truth reuse, no new task
    env.now += 60;
    const auto again = env.service->submit(req, paths);
    CHECK(again.status == RequestRecord::Status::kResolved);
    CHECK(again.method == ResolutionMethod::kTruthReuse);
    CHECK_FALSE(again.task_id.has_value());
    CHECK(again.route->membership() == truth);
    CHECK(env.service->tasks().size() == 1);

    // the same OD in another hour of the week: the stored truth makes
    // auto-evaluation resolve it (Jaccard 1 against the truth)
    auto later = req;
    later.departure += 5 * 3600;
    const auto third = env.service->submit(later, paths);
    CHECK(third.method == ResolutionMethod::kAutoEval);
    CHECK(third.route->membership() == truth);
    CHECK(third.confidences[1] == 1.0);
  }

  TEST_CASE("answer validation and idempotency") {
    Env env;
    env.seed(6);
    const auto rec = env.service->submit(fixture::corner_request(), fixture::two_paths());
    const auto task = env.service->task(*rec.task_id);
    const auto w = task.assignments.front().worker;
    const auto root = task.tree.nodes()[task.tree.root()].landmark;
    CHECK_THROWS_AS(env.service->record_answer(task.id, "stranger", root, true), Error);
    CHECK_THROWS_AS(env.service->record_answer(task.id, w, "g1_1", true), Error);
    CHECK_THROWS_AS(env.service->record_answer(999, w, root, true), Error);
    env.now += 100;
    const auto first = env.service->record_answer(task.id, w, root, false);
    CHECK_FALSE(first.duplicate);
    const auto events_before = env.service->events().size();
    const auto dup = env.service->record_answer(task.id, w, root, true);  // first write wins
    CHECK(dup.duplicate);
    CHECK(dup.step.route == first.step.route);
    CHECK(env.service->events().size() == events_before);
    CHECK(env.service->task(task.id).assignment(w)->trace == AnswerTrace{{root, false}});
    CHECK(env.service->open_assignments(w).empty());
  }

  TEST_CASE("no eligible workers: created, then retried after backoff") {
    Env env;
    env.service->ingest_landmarks(fixture::service_landmarks());
    const auto rec = env.service->submit(fixture::corner_request(), fixture::two_paths());
    auto task = env.service->task(*rec.task_id);
    CHECK(task.state == TaskState::kCreated);
    CHECK(task.retries == 1);
    CHECK(task.next_retry_at == env.now + env.service->config().retry_backoff_s);

    env.service->ingest_workers(fixture::service_workers(2));
    env.service->retrain();
    env.now += 10;
    env.service->tick();
    CHECK(env.service->task(task.id).state == TaskState::kCreated);  // backoff not over
    env.now = task.next_retry_at;
    env.service->tick();
    task = env.service->task(task.id);
    CHECK(task.state == TaskState::kAssigned);
    CHECK(task.shortfall);
    CHECK(task.assignments.size() == 2);

    // two of two agree: no early stop (floor of three votes), resolves when all complete
    for (const auto& a : task.assignments) env.answer_as(task.id, a.worker, members(fixture::two_paths()[0]));
    task = env.service->task(task.id);
    CHECK(task.state == TaskState::kResolved);
    CHECK_FALSE(task.early_stopped);
  }

  TEST_CASE("deadline handling") {
    Env env;
    env.seed(6);
    const auto silent = env.service->submit(fixture::corner_request(), fixture::two_paths());
    auto req2 = fixture::corner_request(fixture::kStart + 9 * 3600);
    req2.destination = fixture::service_landmarks()[7].location;
    const auto partial = env.service->submit(req2, {{"maps", {"g0_0", "g0_1", "g1_1", "g2_1"}, {}},
                                                    {"taxi", {"g0_0", "g1_0", "g2_0", "g2_1"}, {}}});
    REQUIRE(partial.task_id);
    const auto t2 = env.service->task(*partial.task_id);
    env.now += 600;
    env.answer_as(t2.id, t2.assignments[0].worker, {"g0_0", "g1_0", "g2_0", "g2_1"});

    env.now += 25 * 3600;
    env.service->tick();
    const auto t1 = env.service->task(*silent.task_id);
    CHECK(t1.state == TaskState::kExpired);
    CHECK(env.service->request(silent.id).status == RequestRecord::Status::kExpired);
    const auto done = env.service->task(t2.id);
    CHECK(done.state == TaskState::kResolved);
    CHECK(env.service->request(partial.id).confidence == 1.0);
    CHECK(env.service->truths().size() == 1);
    for (const auto& w : env.service->workers()) CHECK(w.outstanding_tasks == 0);
  }

  TEST_CASE("single candidate and bad requests") {
    Env env;
    env.seed(3);
    const auto one = env.service->submit(fixture::corner_request(), {fixture::two_paths()[0]});
    CHECK(one.method == ResolutionMethod::kAutoEval);
    auto bad = fixture::corner_request();
    bad.destination = bad.source;
    CHECK_THROWS_AS(env.service->submit(bad, fixture::two_paths()), Error);
    bad = fixture::corner_request();
    bad.deadline_hours = 0;
    CHECK_THROWS_AS(env.service->submit(bad, fixture::two_paths()), Error);
    CHECK_THROWS_AS(env.service->submit(fixture::corner_request(fixture::kStart + 40 * 3600), {{"x", {"nope"}, {}}}), Error);
    // raw coordinate candidates are calibrated
    const auto g = fixture::service_landmarks();
    auto req = fixture::corner_request(fixture::kStart + 50 * 3600);
    const auto raw = env.service->submit(req, {{"gps", {}, {g[0].location, g[1].location, g[2].location, g[5].location, g[8].location}}});
    CHECK(raw.route->sequence() == std::vector<LandmarkId>{"g0_0", "g0_1", "g0_2", "g1_2", "g2_2"});
  }

  TEST_CASE("state survives a restart") {
    fixture::TempDir dir;
    const auto db = (dir.path / "state.db").string();
    std::uint64_t task_id = 0, request_id = 0;
    WorkerId first;
    Timestamp now = fixture::kStart;
    {
      Env env({}, db);
      env.seed(6);
      const auto rec = env.service->submit(fixture::corner_request(), fixture::two_paths());
      request_id = rec.id;
      task_id = *rec.task_id;
      first = env.service->task(task_id).assignments[0].worker;
      env.now += 100;
      env.answer_as(task_id, first, members(fixture::two_paths()[0]));
      now = env.now;
    }
    Env env({}, db);
    env.now = now;
    const auto task = env.service->task(task_id);
    CHECK(task.state == TaskState::kCollecting);
    CHECK(task.assignment(first)->leaf == std::optional<std::size_t>(0));
    CHECK(env.service->request(request_id).status == RequestRecord::Status::kPending);
    CHECK(env.service->accumulated().rows() == 6);
    CHECK(env.service->landmarks().size() == 9);
    for (const auto& a : task.assignments) {
      if (env.service->task(task_id).state == TaskState::kResolved) break;
      if (a.worker != first) env.answer_as(task_id, a.worker, members(fixture::two_paths()[0]));
    }
    CHECK(env.service->task(task_id).state == TaskState::kResolved);
    // ids keep counting after a restart
    auto req = fixture::corner_request(fixture::kStart + 30 * 3600);
    req.destination = fixture::service_landmarks()[5].location;
    const auto next = env.service->submit(req, {{"a", {"g0_0", "g0_1", "g0_2", "g1_2"}, {}},
                                                {"b", {"g0_0", "g1_0", "g1_1", "g1_2"}, {}}});
    CHECK(next.id == request_id + 1);
    CHECK(*next.task_id == task_id + 1);
    {
      Env reopened({}, db);
      CHECK(reopened.service->truths().size() == 1);
      CHECK(reopened.service->reward_balance(first) == 4);
      CHECK(reopened.service->events().size() == env.service->events().size());
    }
  }

  TEST_CASE("concurrent answering keeps per-task state consistent") {
    Env env;
    env.seed(10);
    std::vector<std::uint64_t> tasks;
    const auto g = fixture::service_landmarks();
    for (int i = 0; i < 4; ++i) {
      auto req = fixture::corner_request(fixture::kStart + (10 + i) * 3600);
      tasks.push_back(*env.service->submit(req, fixture::two_paths()).task_id);
    }
    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (auto id : tasks) {
      threads.emplace_back([&, id] {
        try {
          const auto t = env.service->task(id);
          for (const auto& a : t.assignments) {
            try {
              env.answer_as(id, a.worker, members(fixture::two_paths()[1]));
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kTaskClosed) ++failures;
            }
          }
        } catch (...) {
          ++failures;
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(failures == 0);
    for (auto id : tasks) CHECK(env.service->task(id).state == TaskState::kResolved);
    for (const auto& w : env.service->workers()) {
      CHECK(w.outstanding_tasks <= env.service->config().eligibility.max_outstanding);
      CHECK(w.outstanding_tasks == 0);
    }
  }
}
