#include <cmath>
#include <random>

#include "crowdroute/error.hpp"
#include "crowdroute/worker_select.hpp"
#include "doctest.h"

using namespace crowdroute;

namespace {

// Worker whose single response sample gives exactly the requested rate.
WorkerProfile with_rate(const std::string& id, double lambda, std::uint32_t outstanding = 0) {
  WorkerProfile w;
  w.id = id;
  w.response_hours = {1.0 / lambda};
  w.outstanding_tasks = outstanding;
  return w;
}

AccumulatedMatrix matrix(const std::vector<WorkerId>& ws, const std::vector<LandmarkId>& ls,
                         const std::vector<std::vector<double>>& v) {
  AccumulatedMatrix m(ws, ls);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    for (std::size_t j = 0; j < ls.size(); ++j) m.set(i, j, v[i][j]);
  }
  return m;
}

}  // namespace

TEST_SUITE("worker-select") {
  TEST_CASE("rate estimation") {
    const std::vector<double> ones{1, 1, 1}, two_four{2, 4}, none;
    CHECK(estimate_lambda(ones).lambda == 1.0);
    CHECK(estimate_lambda(ones).source == ResponseModel::Source::kMaximumLikelihood);
    CHECK(estimate_lambda(two_four).lambda == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(estimate_lambda(none, 1.0 / 24).lambda == 1.0 / 24);
    CHECK(estimate_lambda(none).source == ResponseModel::Source::kPrior);
    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(estimate_lambda(bad), Error);
  }

  TEST_CASE("response probability") {
    CHECK(std::abs(response_probability({1.0}, 1.0) - 0.632121) <= 1e-6);
    CHECK(std::abs(response_probability({1.0}, 1.0) - (1.0 - std::exp(-1.0))) <= 1e-15);
    CHECK(response_probability({1.0}, 0.0) == 0.0);
    CHECK(std::abs(response_probability({2.0}, 1.0) - 0.864665) <= 1e-6);
    CHECK_THROWS_AS(response_probability({1.0}, -1.0), Error);
  }

  TEST_CASE("eligibility filters") {
    const std::vector<LandmarkId> task{"a", "b"};
    const auto m = matrix({"fast", "slow", "busy", "blind", "edge"}, {"a", "b"},
                          {{1, 0}, {1, 1}, {0, 2}, {0, 0}, {0.5, 0}});
    EligibilityConfig cfg;
    const double t = 1.0;
    const std::vector<WorkerProfile> ws{with_rate("fast", 5.0), with_rate("slow", std::log(2.0)),
                                        with_rate("busy", 5.0, cfg.max_outstanding), with_rate("blind", 5.0),
                                        with_rate("edge", 0.9)};
    // responseProbability(edge) is exactly the threshold and stays eligible
    cfg.eta_time = response_probability(estimate_lambda(ws[4].response_hours), t);
    CHECK(response_probability(estimate_lambda(ws[1].response_hours), t) == doctest::Approx(0.5));
    const auto got = candidate_workers(task, m, ws, cfg, t);
    CHECK(got == std::vector<WorkerId>{"edge", "fast"});
  }

  TEST_CASE("preference scores follow rank") {
    const auto m = matrix({"a", "b", "c", "d", "e", "z"}, {"l"}, {{5}, {4}, {3}, {2}, {1}, {0}});
    const std::vector<WorkerId> cand{"a", "b", "c", "d", "e", "z"};
    const auto p = preference_scores("l", cand, m);
    CHECK(p.at("a") == 1.0);
    CHECK(p.at("c") == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(p.at("e") == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p.at("z") == 0.0);
    // ties by id
    const auto tie = matrix({"b", "a"}, {"l"}, {{1}, {1}});
    const std::vector<WorkerId> both{"b", "a"};
    const auto pt = preference_scores("l", both, tie);
    CHECK(pt.at("a") == 1.0);
    CHECK(pt.at("b") == 0.5);
  }

  TEST_CASE("narrow expertise loses to broad familiarity") {
    std::vector<LandmarkId> ls;
    for (int i = 1; i <= 10; ++i) ls.push_back("l" + std::to_string(i));
    std::vector<std::vector<double>> v(2, std::vector<double>(10, 0.1));
    v[0] = std::vector<double>(10, 0.0);
    v[0][0] = 2.0;
    const auto m = matrix({"w1", "w2"}, ls, v);
    const std::vector<WorkerProfile> ws{with_rate("w1", 5.0), with_rate("w2", 5.0)};
    const auto r = top_k_workers(ls, m, ws, {}, 24.0, 2);
    REQUIRE(r.top.size() == 2);
    CHECK(r.top[0].id == "w2");
    CHECK(r.top[0].total == doctest::Approx(9.5).epsilon(1e-15));
    CHECK(r.top[1].total == 1.0);
    CHECK(r.top[0].breakdown.at("l1") == 0.5);
    CHECK_FALSE(r.shortfall);
    const auto r3 = top_k_workers(ls, m, ws, {}, 24.0, 3);
    CHECK(r3.shortfall);
    CHECK(r3.top.size() == 2);
  }

  TEST_CASE("random instances: single landmark order, scale invariance, zero workers") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::bernoulli_distribution sparse(0.3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<WorkerId> ids;
      std::vector<WorkerProfile> ws;
      for (int i = 0; i < 12; ++i) {
        ids.push_back("w" + std::to_string(10 + i));
        ws.push_back(with_rate(ids.back(), 1.0));
      }
      const std::vector<LandmarkId> ls{"a", "b", "c", "d"};
      std::vector<std::vector<double>> v(12, std::vector<double>(4));
      for (auto& row : v) {
        for (auto& x : row) x = sparse(rng) ? 0.0 : u(rng);
      }
      v[0][0] = 1.0;  // at least one candidate
      const auto m = matrix(ids, ls, v);
      // single landmark: ranking is F descending, ties by id
      const std::vector<LandmarkId> one{"a"};
      const auto single = top_k_workers(one, m, ws, {}, 24.0, 12);
      std::vector<std::pair<double, WorkerId>> expect;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (v[i][0] > 0) expect.push_back({-v[i][0], ids[i]});
      }
      std::sort(expect.begin(), expect.end());
      REQUIRE(single.top.size() == expect.size());
      for (std::size_t i = 0; i < expect.size(); ++i) CHECK(single.top[i].id == expect[i].second);

      const auto base = top_k_workers(ls, m, ws, {}, 24.0, 5);
      auto vs = v;
      for (auto& row : vs) {
        for (auto& x : row) x *= 7.25;
      }
      const auto scaled = top_k_workers(ls, matrix(ids, ls, vs), ws, {}, 24.0, 5);
      REQUIRE(scaled.top.size() == base.top.size());
      for (std::size_t i = 0; i < base.top.size(); ++i) {
        CHECK(scaled.top[i].id == base.top[i].id);
        CHECK(scaled.top[i].total == base.top[i].total);
      }
      for (const auto& r : base.tally) {
        CHECK(r.total >= 0.0);
        CHECK(r.total <= 4.0);
        double sum = 0.0;
        for (const auto& [l, p] : r.breakdown) sum += p;
        CHECK(sum == doctest::Approx(r.total));
      }

      // an all-zero worker changes nobody's total
      auto ids2 = ids;
      ids2.push_back("w00");
      auto v2 = v;
      v2.push_back({0, 0, 0, 0});
      auto ws2 = ws;
      ws2.push_back(with_rate("w00", 1.0));
      const auto plus = top_k_workers(ls, matrix(ids2, ls, v2), ws2, {}, 24.0, 20);
      const auto all = top_k_workers(ls, m, ws, {}, 24.0, 20);
      REQUIRE(plus.tally.size() == all.tally.size());
      for (std::size_t i = 0; i < all.tally.size(); ++i) CHECK(plus.tally[i].total == all.tally[i].total);
    }
  }

  TEST_CASE("no candidates") {
    const auto m = matrix({"w"}, {"a"}, {{0.0}});
    const std::vector<WorkerProfile> ws{with_rate("w", 1.0)};
    const std::vector<LandmarkId> task{"a"};
    CHECK_THROWS_AS(top_k_workers(task, m, ws, {}, 24.0, 3), Error);
  }
}
