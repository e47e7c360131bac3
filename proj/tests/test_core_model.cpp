#include <random>

#include "crowdroute/error.hpp"
#include "crowdroute/model.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crowdroute;

TEST_SUITE("core-model") {
  TEST_CASE("haversine matches an independent formula") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 179);
    for (int i = 0; i < 200; ++i) {
      const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
      CHECK(distance_km(a, b) == doctest::Approx(oracle::haversine_km(a.lat, a.lon, b.lat, b.lon)).epsilon(1e-12));
    }
    CHECK(distance_km({0, 0}, {0, 1}) == doctest::Approx(111.195).epsilon(1e-4));
  }

  TEST_CASE("landmark index rejects bad input") {
    CHECK_THROWS_AS(LandmarkIndex({{"a", "", {0, 0}, 0.1}, {"a", "", {1, 1}, 0.2}}), Error);
    CHECK_THROWS_AS(LandmarkIndex({{"a", "", {91, 0}, 0.1}}), Error);
    CHECK_THROWS_AS(LandmarkIndex({{"a", "", {0, 0}, -0.1}}), Error);
    const LandmarkIndex idx({{"a", "", {0, 0}, 0.1}});
    CHECK_THROWS_AS(idx.at("zz"), Error);
    CHECK(idx.find("zz") == nullptr);
  }

  TEST_CASE("range query equals an exhaustive haversine scan") {
    std::mt19937_64 rng(11);
    std::vector<Landmark> ls;
    std::uniform_real_distribution<double> dlat(31.0, 31.3), dlon(121.3, 121.6);
    for (int i = 0; i < 400; ++i) ls.push_back({"l" + std::to_string(i), "", {dlat(rng), dlon(rng)}, 0.0});
    // a cluster straddling the antimeridian
    for (int i = 0; i < 40; ++i) {
      double lon = 179.96 + 0.002 * i;
      if (lon > 180.0) lon -= 360.0;
      ls.push_back({"x" + std::to_string(i), "", {-16.0 + 0.005 * i, lon}, 0.0});
    }
    const LandmarkIndex idx(ls);
    std::vector<GeoPoint> queries;
    for (int q = 0; q < 60; ++q) queries.push_back({dlat(rng), dlon(rng)});
    queries.push_back({-15.8, 180.0});
    queries.push_back({-15.8, -179.999});
    for (const auto& q : queries) {
      for (double r : {0.05, 0.5, 2.0, 15.0}) {
        std::vector<std::string> expect;
        for (const auto& l : ls) {
          if (oracle::haversine_km(q.lat, q.lon, l.location.lat, l.location.lon) <= r) expect.push_back(l.id);
        }
        std::sort(expect.begin(), expect.end());
        std::vector<std::string> got;
        for (const auto* l : idx.within(q, r)) got.push_back(l->id);
        CHECK(got == expect);
      }
    }
  }

  TEST_CASE("landmark route collapses consecutive duplicates") {
    const LandmarkRoute r({"a", "a", "b", "a", "a"});
    CHECK(r.sequence() == std::vector<LandmarkId>{"a", "b", "a"});
    CHECK(r.membership() == fixture::ids({"a", "b"}));
    CHECK_THROWS_AS(LandmarkRoute(std::vector<LandmarkId>{}), Error);
  }

  TEST_CASE("candidate set merges identical memberships and keeps provenance") {
    const CandidateSet c({{"maps", LandmarkRoute({"a", "b", "c"})},
                          {"taxi", LandmarkRoute({"a", "c", "b"})},
                          {"mfp", LandmarkRoute({"a", "d"})}});
    REQUIRE(c.size() == 2);
    CHECK(c.provenance(0) == std::vector<std::string>{"maps", "taxi"});
    CHECK(c.provenance(1) == std::vector<std::string>{"mfp"});
    CHECK(c.total_proposals() == 3);
  }

  TEST_CASE("calibrate snaps exact points and collapses repeats") {
    const auto g = fixture::grid(3, 3, 1.0);
    const LandmarkIndex idx(g);
    RawRoute raw{{g[0].location, g[1].location, g[2].location}};
    CHECK(calibrate(raw, idx, 0.3).sequence() == std::vector<LandmarkId>{"g0_0", "g0_1", "g0_2"});
    RawRoute twice{{g[0].location, offset_km(g[0].location, 0.05, 0.0), g[4].location}};
    CHECK(calibrate(twice, idx, 0.3).sequence() == std::vector<LandmarkId>{"g0_0", "g1_1"});
    RawRoute nowhere{{offset_km(g[0].location, -5, -5), offset_km(g[0].location, -6, -6)}};
    CHECK_THROWS_AS(calibrate(nowhere, idx, 0.3), Error);
    CHECK_THROWS_AS(calibrate(RawRoute{{g[0].location}}, idx, 0.3), Error);
  }

  TEST_CASE("calibrate equals an exhaustive nearest-landmark scan") {
    const auto g = fixture::grid(6, 6, 0.8);
    const LandmarkIndex idx(g);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 4.5);
    for (int trial = 0; trial < 50; ++trial) {
      RawRoute raw;
      for (int p = 0; p < 5; ++p) raw.points.push_back(offset_km(g[0].location, u(rng), u(rng)));
      std::vector<std::string> expect;
      for (const auto& p : raw.points) {
        const Landmark* best = nullptr;
        double best_d = 0.0;
        for (const auto& l : g) {
          const double d = oracle::haversine_km(p.lat, p.lon, l.location.lat, l.location.lon);
          if (d > 0.5) continue;
          if (!best || d < best_d || (d == best_d && l.id < best->id)) {
            best = &l;
            best_d = d;
          }
        }
        if (best && (expect.empty() || expect.back() != best->id)) expect.push_back(best->id);
      }
      if (expect.empty()) {
        CHECK_THROWS_AS(calibrate(raw, idx, 0.5), Error);
      } else {
        const auto got = calibrate(raw, idx, 0.5);
        CHECK(got.sequence() == expect);
        // idempotent on its own output
        RawRoute again;
        for (const auto& id : got.sequence()) again.points.push_back(idx.at(id).location);
        if (again.points.size() == 1) again.points.push_back(again.points.front());
        CHECK(calibrate(again, idx, 0.5).sequence() == got.sequence());
      }
    }
  }

  TEST_CASE("discriminative predicates on the two-route example") {
    const auto routes = fixture::candidates({{"l1", "l2", "l3"}, {"l1", "l2", "l4"}});
    CHECK(is_discriminative(fixture::ids({"l3", "l4"}), routes));
    CHECK_FALSE(is_discriminative(fixture::ids({"l1", "l2"}), routes));
    CHECK_FALSE(is_simplest_discriminative(fixture::ids({"l3", "l4"}), routes));
    CHECK(is_simplest_discriminative(fixture::ids({"l3"}), routes));
    CHECK(is_simplest_discriminative(fixture::ids({"l4"}), routes));
    CHECK(is_discriminative({}, fixture::candidates({{"a"}})));
    CHECK(beneficial_landmarks(routes) == fixture::ids({"l3", "l4"}));
  }

  TEST_CASE("objective value is the mean significance") {
    const SignificanceMap s{{"l3", 0.5}, {"l4", 0.3}};
    CHECK(objective_value(fixture::ids({"l3"}), s) == 0.5);
    CHECK(objective_value(fixture::ids({"l3", "l4"}), s) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(objective_value({}, s), Error);
    const LandmarkIndex idx({{"l3", "", {0, 0}, 0.5}, {"l4", "", {0, 1}, 0.3}});
    CHECK(objective_value(fixture::ids({"l3", "l4"}), idx) == doctest::Approx(0.4));
    // scale equivariance
    SignificanceMap scaled{{"l3", 1.5}, {"l4", 0.9}};
    CHECK(objective_value(fixture::ids({"l3", "l4"}), scaled) == doctest::Approx(3 * 0.4));
  }

  TEST_CASE("beneficial landmarks and discriminativeness match set-algebra oracles") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const auto inst = oracle::random_instance(rng, 4, 12);
      const auto routes = fixture::candidates(inst.sequences);
      const auto b = beneficial_landmarks(routes);
      CHECK(b == oracle::beneficial(inst.memberships));
      CHECK(is_discriminative(b, routes));
      std::mt19937_64 pick(trial);
      std::bernoulli_distribution coin(0.4);
      LandmarkSet l;
      for (const auto& id : b) {
        if (coin(pick)) l.insert(id);
      }
      CHECK(is_discriminative(l, routes) == oracle::discriminative(l, inst.memberships));
      CHECK(is_simplest_discriminative(l, routes) == oracle::simplest(l, inst.memberships));
      // monotonicity
      if (is_discriminative(l, routes)) {
        auto bigger = l;
        bigger.insert("src");
        CHECK(is_discriminative(bigger, routes));
      }
    }
  }

  TEST_CASE("min-max normalization") {
    const auto n = min_max_normalize({{"a", 2.0}, {"b", 4.0}, {"c", 3.0}});
    CHECK(n.at("a") == 0.0);
    CHECK(n.at("b") == 1.0);
    CHECK(n.at("c") == 0.5);
    CHECK(min_max_normalize({{"a", 7.0}, {"b", 7.0}}).at("a") == 1.0);
  }
}
