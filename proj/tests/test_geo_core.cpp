#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crowdflow/core.hpp"
#include "crowdflow/errors.hpp"
#include "crowdflow/rng.hpp"

using namespace crowdflow;

namespace {

Worker make_worker(const std::string& id, double lat, double lon, double reach = 25.0,
                   double speed = 5.0) {
  return {id, {lat, lon}, reach, speed};
}

SpatialTask make_task(const std::string& id, double lat, double lon, Timestamp pub,
                      Duration valid) {
  return {id, {lat, lon}, pub, valid, {"food"}};
}

}  // namespace

TEST_CASE("distance: identical points are zero") {
  CHECK(distance_km({10, 20}, {10, 20}, Metric::Haversine) == doctest::Approx(0.0));
  CHECK(distance_km({10, 20}, {10, 20}, Metric::PlanarEuclidean) == doctest::Approx(0.0));
}

TEST_CASE("distance: one degree of longitude at the equator") {
  CHECK(distance_km({0, 0}, {0, 1}, Metric::Haversine) == doctest::Approx(111.195).epsilon(1e-4));
}

TEST_CASE("distance: planar 3-4-5 triangle") {
  CHECK(distance_km({0, 0}, {3, 4}, Metric::PlanarEuclidean) == doctest::Approx(5.0));
}

TEST_CASE("distance: invalid coordinates rejected") {
  CHECK_THROWS_AS(distance_km({91, 0}, {0, 0}, Metric::Haversine), std::domain_error);
  CHECK_THROWS_AS(distance_km({0, 0}, {0, 181}, Metric::PlanarEuclidean), std::domain_error);
  CHECK_THROWS_AS(metric_from_string("manhattan"), std::domain_error);
}

TEST_CASE("distance: symmetric and nonnegative on random pairs") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint a{uniform_double(rng) * 180 - 90, uniform_double(rng) * 360 - 180};
    const GeoPoint b{uniform_double(rng) * 180 - 90, uniform_double(rng) * 360 - 180};
    for (const Metric metric : {Metric::Haversine, Metric::PlanarEuclidean}) {
      const double ab = distance_km(a, b, metric);
      CHECK(ab >= 0.0);
      CHECK(ab == doctest::Approx(distance_km(b, a, metric)).epsilon(1e-12));
    }
  }
}

TEST_CASE("distance: planar metric satisfies the triangle inequality") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint a{uniform_double(rng) * 160 - 80, uniform_double(rng) * 320 - 160};
    const GeoPoint b{uniform_double(rng) * 160 - 80, uniform_double(rng) * 320 - 160};
    const GeoPoint c{uniform_double(rng) * 160 - 80, uniform_double(rng) * 320 - 160};
    const double ab = distance_km(a, b, Metric::PlanarEuclidean);
    const double bc = distance_km(b, c, Metric::PlanarEuclidean);
    const double ac = distance_km(a, c, Metric::PlanarEuclidean);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("travel time: basic arithmetic and domain errors") {
  CHECK(travel_time_seconds(5, 5) == doctest::Approx(3600));
  CHECK(travel_time_seconds(0, 5) == doctest::Approx(0));
  CHECK(travel_time_seconds(2.5, 5) == doctest::Approx(1800));
  CHECK_THROWS_AS(travel_time_seconds(1, 0), std::domain_error);
  CHECK_THROWS_AS(travel_time_seconds(1, -3), std::domain_error);
}

TEST_CASE("eligible pairs: worker at the task location qualifies") {
  Snapshot snap;
  snap.instant = 1000;
  snap.workers = {make_worker("w1", 10, 20)};
  snap.tasks = {make_task("s1", 10, 20, 900, 600)};
  const auto pairs = eligible_pairs(snap);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].worker_id == "w1");
  CHECK(pairs[0].task_id == "s1");
  CHECK(pairs[0].distance_km == doctest::Approx(0.0));
}

TEST_CASE("eligible pairs: outside the reach radius is excluded") {
  Snapshot snap;
  snap.instant = 0;
  // ~30 km away with a 25 km radius.
  snap.workers = {make_worker("w1", 0, 0, 25.0)};
  snap.tasks = {make_task("s1", 0, 0.27, 0, 36000)};
  CHECK(distance_km({0, 0}, {0, 0.27}, Metric::Haversine) > 25.0);
  CHECK(eligible_pairs(snap).empty());
}

TEST_CASE("eligible pairs: deadline excludes a slow worker") {
  // 5 km away at 5 km/h needs 60 minutes; the task expires in 30.
  Snapshot snap;
  snap.instant = 0;
  snap.workers = {make_worker("w1", 0, 0, 25.0, 5.0)};
  snap.tasks = {{"s1", {0, 5}, 0, 1800, {"food"}}};
  CHECK(eligible_pairs(snap, Metric::PlanarEuclidean).empty());

  // With 2 hours of validity the same pair qualifies.
  snap.tasks[0].valid_duration = 7200;
  CHECK(eligible_pairs(snap, Metric::PlanarEuclidean).size() == 1);
}

TEST_CASE("eligible pairs: every returned pair re-passes both predicates") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    Snapshot snap;
    snap.instant = 10000;
    const int W = 1 + static_cast<int>(uniform_index(rng, 5));
    const int S = 1 + static_cast<int>(uniform_index(rng, 5));
    for (int w = 0; w < W; ++w) {
      snap.workers.push_back(make_worker("w" + std::to_string(w), uniform_double(rng),
                                         uniform_double(rng), 0.02 + uniform_double(rng) * 0.2,
                                         1.0 + uniform_double(rng) * 9.0));
    }
    for (int s = 0; s < S; ++s) {
      snap.tasks.push_back(make_task("s" + std::to_string(s), uniform_double(rng),
                                     uniform_double(rng),
                                     10000 - static_cast<Timestamp>(uniform_index(rng, 100)),
                                     1 + static_cast<Duration>(uniform_index(rng, 4000))));
    }
    const auto pairs = eligible_pairs(snap, Metric::PlanarEuclidean);
    CHECK(pairs.size() <= static_cast<std::size_t>(W * S));
    for (const CandidatePair& pair : pairs) {
      const auto worker = std::find_if(snap.workers.begin(), snap.workers.end(),
                                       [&](const Worker& w) { return w.id == pair.worker_id; });
      const auto task = std::find_if(snap.tasks.begin(), snap.tasks.end(),
                                     [&](const SpatialTask& s) { return s.id == pair.task_id; });
      REQUIRE(worker != snap.workers.end());
      REQUIRE(task != snap.tasks.end());
      const double d = distance_km(worker->location, task->location, Metric::PlanarEuclidean);
      CHECK(d <= worker->reach_radius_km);
      CHECK(static_cast<double>(snap.instant) + travel_time_seconds(d, worker->speed_kmh) <=
            static_cast<double>(task->deadline()));
      CHECK(d == doctest::Approx(pair.distance_km).epsilon(1e-12));
    }
  }
}

TEST_CASE("eligible pairs: invariant under permutation of the input lists") {
  Snapshot snap;
  snap.instant = 0;
  for (int i = 0; i < 6; ++i) {
    snap.workers.push_back(make_worker("w" + std::to_string(i), 0.001 * i, 0.0, 10.0));
    snap.tasks.push_back(make_task("s" + std::to_string(i), 0.0, 0.001 * i, 0, 3600));
  }
  const auto base = eligible_pairs(snap, Metric::PlanarEuclidean);
  REQUIRE(!base.empty());

  std::mt19937 shuffler(99);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(snap.workers.begin(), snap.workers.end(), shuffler);
    std::shuffle(snap.tasks.begin(), snap.tasks.end(), shuffler);
    const auto shuffled = eligible_pairs(snap, Metric::PlanarEuclidean);
    REQUIRE(shuffled.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(shuffled[i].worker_id == base[i].worker_id);
      CHECK(shuffled[i].task_id == base[i].task_id);
    }
  }
}

TEST_CASE("snapshot validation catches violations") {
  Snapshot snap;
  snap.instant = 100;
  snap.workers = {make_worker("w1", 0, 0)};
  snap.tasks = {make_task("s1", 0, 0, 50, 100)};
  CHECK_NOTHROW(validate_snapshot(snap));

  SUBCASE("duplicate worker ids") {
    snap.workers.push_back(make_worker("w1", 1, 1));
    CHECK_THROWS_AS(validate_snapshot(snap), DataError);
  }
  SUBCASE("expired task") {
    snap.tasks[0].valid_duration = 10;  // deadline 60 < instant 100
    CHECK_THROWS_AS(validate_snapshot(snap), DataError);
  }
  SUBCASE("task not yet published") {
    snap.tasks[0].publication_time = 101;
    CHECK_THROWS_AS(validate_snapshot(snap), DataError);
  }
  SUBCASE("empty categories") {
    snap.tasks[0].categories.clear();
    CHECK_THROWS_AS(validate_snapshot(snap), DataError);
  }
  SUBCASE("nonpositive reach") {
    snap.workers[0].reach_radius_km = 0.0;
    CHECK_THROWS_AS(validate_snapshot(snap), DataError);
  }
}
