#include <doctest.h>

#include <cmath>
#include <set>

#include "crowdflow/assign.hpp"
#include "crowdflow/rng.hpp"
#include "oracles.hpp"

using namespace crowdflow;

namespace {

// Planar snapshot helpers: coordinates are kilometre offsets.
Worker make_worker(const std::string& id, double x, double y, double reach = 50.0,
                   double speed = 5.0) {
  return {id, {x, y}, reach, speed};
}

SpatialTask make_task(const std::string& id, double x, double y, Duration valid = 1000000) {
  return {id, {x, y}, 0, valid, {"c"}};
}

// A snapshot where all pairs are eligible (same location, long validity).
Snapshot colocated_snapshot(int workers, int tasks) {
  Snapshot snap;
  snap.instant = 0;
  for (int w = 0; w < workers; ++w) snap.workers.push_back(make_worker("w" + std::to_string(w), 0, 0));
  for (int s = 0; s < tasks; ++s) snap.tasks.push_back(make_task("s" + std::to_string(s), 0, 0));
  return snap;
}

PairScores uniform_scores(const Snapshot& snap, double value) {
  PairScores scores;
  for (const auto& pair : eligible_pairs(snap, Metric::PlanarEuclidean)) {
    scores[{pair.worker_id, pair.task_id}] = value;
  }
  return scores;
}

}  // namespace

TEST_CASE("edge cost: strategy formulas and boundaries") {
  CHECK(edge_cost(Strategy::IA, 0.0, 0, 0, 1) == doctest::Approx(1.0));
  CHECK(edge_cost(Strategy::IA, 3.0, 0, 0, 1) == doctest::Approx(0.25));
  // DIA at distance 0 keeps the full influence; beyond the reach it is 1.
  CHECK(edge_cost(Strategy::DIA, 3.0, 0, 0.0, 10.0) == doctest::Approx(0.25));
  CHECK(edge_cost(Strategy::DIA, 3.0, 0, 10.0, 10.0) == doctest::Approx(1.0));
  CHECK(edge_cost(Strategy::DIA, 3.0, 0, 25.0, 10.0) == doctest::Approx(1.0));
  // EIA with entropy ln 2 and influence 4.
  CHECK(edge_cost(Strategy::EIA, 4.0, std::log(2.0), 0, 1) ==
        doctest::Approx((std::log(2.0) + 1.0) / 5.0).epsilon(1e-12));
  CHECK(edge_cost(Strategy::EIA, 4.0, std::log(2.0), 0, 1) == doctest::Approx(0.3386).epsilon(1e-3));
  // EIA at entropy 0 collapses to IA.
  CHECK(edge_cost(Strategy::EIA, 4.0, 0.0, 0, 1) == doctest::Approx(edge_cost(Strategy::IA, 4.0, 0, 0, 1)));
  CHECK(edge_cost(Strategy::MTA, 123.0, 9, 9, 1) == 0.0);
  CHECK_THROWS_AS(edge_cost(Strategy::MI, 1.0, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(edge_cost(Strategy::IA, -1.0, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(strategy_from_string("XXX"), std::invalid_argument);
}

TEST_CASE("edge cost: always positive and bounded for flow strategies") {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const double influence = uniform_double(rng) * 20;
    const double entropy = uniform_double(rng) * 3;
    const double d = uniform_double(rng) * 30;
    const double r = 0.1 + uniform_double(rng) * 30;
    for (const Strategy strategy : {Strategy::IA, Strategy::EIA, Strategy::DIA}) {
      const double cost = edge_cost(strategy, influence, entropy, d, r);
      CHECK(cost > 0.0);
      CHECK(cost <= 1.0 + entropy);
    }
  }
}

TEST_CASE("mcmf: single eligible pair is assigned") {
  FlowNetwork network;
  network.num_workers = 1;
  network.num_tasks = 1;
  network.arcs = {{0, 0, 0.5}};
  const FlowAssignment flow = solve_mcmf(network);
  REQUIRE(flow.pairs.size() == 1);
  CHECK(flow.total_cost == doctest::Approx(0.5));
}

TEST_CASE("mcmf: cheaper worker wins a contested task") {
  FlowNetwork network;
  network.num_workers = 2;
  network.num_tasks = 1;
  network.arcs = {{0, 0, 0.2}, {1, 0, 0.5}};
  const FlowAssignment flow = solve_mcmf(network);
  REQUIRE(flow.pairs.size() == 1);
  CHECK(flow.pairs[0].first == 0);
}

TEST_CASE("mcmf: max cardinality beats cheap short matchings") {
  // Taking the cheap arc (w0, t0) alone would block the perfect matching;
  // cardinality must win even though its total cost is higher.
  FlowNetwork network;
  network.num_workers = 2;
  network.num_tasks = 2;
  network.arcs = {{0, 0, 0.01}, {1, 0, 0.9}, {0, 1, 0.9}};
  const FlowAssignment flow = solve_mcmf(network);
  CHECK(flow.pairs.size() == 2);
  CHECK(flow.total_cost == doctest::Approx(1.8));
}

TEST_CASE("mcmf: matches exhaustive enumeration on random instances") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const int W = 1 + static_cast<int>(uniform_index(rng, 6));
    const int S = 1 + static_cast<int>(uniform_index(rng, 6));
    FlowNetwork network;
    network.num_workers = W;
    network.num_tasks = S;
    std::vector<std::vector<std::pair<bool, double>>> eligible(
        static_cast<std::size_t>(W),
        std::vector<std::pair<bool, double>>(static_cast<std::size_t>(S), {false, 0.0}));
    for (int w = 0; w < W; ++w) {
      for (int s = 0; s < S; ++s) {
        if (uniform_double(rng) < 0.55) {
          const double cost = 0.01 + uniform_double(rng);
          network.arcs.push_back({w, s, cost});
          eligible[static_cast<std::size_t>(w)][static_cast<std::size_t>(s)] = {true, cost};
        }
      }
    }
    const FlowAssignment flow = solve_mcmf(network);
    const oracles::BruteForceResult best = oracles::brute_force_assignment(eligible);
    CHECK(flow.pairs.size() == best.cardinality);
    CHECK(flow.total_cost == doctest::Approx(best.total_cost).epsilon(1e-9));
  }
}

TEST_CASE("assign: no eligible pairs yields an empty plan") {
  Snapshot snap;
  snap.instant = 0;
  snap.workers = {make_worker("w0", 0, 0, 1.0)};
  snap.tasks = {make_task("s0", 30, 30)};
  const PairScores scores;
  CHECK(assign_ia(snap, scores, Metric::PlanarEuclidean).size() == 0);
  CHECK(assign_mta(snap, Metric::PlanarEuclidean).size() == 0);
  CHECK(assign_mi(snap, scores, Metric::PlanarEuclidean).size() == 0);
}

TEST_CASE("assign: uniform influence makes IA cardinality match MTA") {
  const Snapshot snap = colocated_snapshot(4, 3);
  const PairScores scores = uniform_scores(snap, 1.5);
  const AssignmentPlan ia = assign_ia(snap, scores, Metric::PlanarEuclidean);
  const AssignmentPlan mta = assign_mta(snap, Metric::PlanarEuclidean);
  CHECK(ia.size() == mta.size());
  CHECK(ia.size() == 3);
}

TEST_CASE("assign: IA prefers a distant high-influence worker over the nearest one") {
  // One task, two workers: the distant worker spreads the word much
  // better. Nearest-assignment picks w_near; IA must not.
  Snapshot snap;
  snap.instant = 0;
  snap.workers = {make_worker("w_far", 0, 20), make_worker("w_near", 0, 1)};
  snap.tasks = {make_task("s0", 0, 0), make_task("s1", 0, 21)};
  PairScores scores;
  scores[{"w_far", "s0"}] = 4.25;
  scores[{"w_far", "s1"}] = 4.25;
  scores[{"w_near", "s0"}] = 0.85;
  scores[{"w_near", "s1"}] = 0.85;

  const AssignmentPlan ia = assign_ia(snap, scores, Metric::PlanarEuclidean);
  REQUIRE(ia.size() == 2);

  // Nearest assignment: each task to its closest free worker.
  std::map<std::string, std::string> nearest = {{"s0", "w_near"}, {"s1", "w_far"}};
  double nearest_influence = 0.0;
  for (const auto& [task, worker] : nearest) nearest_influence += scores.at({worker, task});
  double ia_influence = 0.0;
  std::map<std::string, std::string> ia_pairs;
  for (const PlanEntry& entry : ia.pairs) {
    ia_influence += entry.influence;
    ia_pairs[entry.task_id] = entry.worker_id;
  }
  CHECK(ia_pairs != nearest);
  CHECK(ia_influence == doctest::Approx(nearest_influence));  // symmetric scores here
  // Both tasks served regardless of the influence skew.
  CHECK(ia_pairs.count("s0") == 1);
  CHECK(ia_pairs.count("s1") == 1);

  // With asymmetric scores the high-influence pairing strictly wins.
  scores[{"w_far", "s0"}] = 5.0;
  scores[{"w_far", "s1"}] = 0.1;
  scores[{"w_near", "s0"}] = 0.1;
  scores[{"w_near", "s1"}] = 0.2;
  const AssignmentPlan ia2 = assign_ia(snap, scores, Metric::PlanarEuclidean);
  REQUIRE(ia2.size() == 2);
  double total = 0.0;
  for (const PlanEntry& entry : ia2.pairs) total += entry.influence;
  CHECK(total == doctest::Approx(5.2));
  CHECK(total > nearest_influence);
}

TEST_CASE("assign MTA: perfect matching and Hall-violating fixtures") {
  const Snapshot square = colocated_snapshot(4, 4);
  CHECK(assign_mta(square, Metric::PlanarEuclidean).size() == 4);

  // Two workers, one shared reachable task.
  Snapshot hall;
  hall.instant = 0;
  hall.workers = {make_worker("w0", 0, 0, 5.0), make_worker("w1", 0, 1, 5.0)};
  hall.tasks = {make_task("s0", 0, 0.5)};
  CHECK(assign_mta(hall, Metric::PlanarEuclidean).size() == 1);
}

TEST_CASE("assign MTA: cardinality equals brute-force matching on random fixtures") {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    Snapshot snap;
    snap.instant = 0;
    const int n = 6;
    // Workers on a line with random reaches; tasks at random rows. The
    // row distances make eligibility a varied random pattern.
    std::vector<double> reach(n);
    for (int w = 0; w < n; ++w) {
      reach[static_cast<std::size_t>(w)] = 0.6 + uniform_double(rng) * 5.0;
      snap.workers.push_back(
          make_worker("w" + std::to_string(w), 0, 2.0 * w, reach[static_cast<std::size_t>(w)]));
    }
    std::vector<std::vector<bool>> eligible(n, std::vector<bool>(n, false));
    for (int s = 0; s < n; ++s) {
      const int row = static_cast<int>(uniform_index(rng, n));
      snap.tasks.push_back(make_task("s" + std::to_string(s), 0.5, 2.0 * row));
      for (int w = 0; w < n; ++w) {
        const double d = std::hypot(0.5, 2.0 * (row - w));
        eligible[static_cast<std::size_t>(w)][static_cast<std::size_t>(s)] =
            d <= reach[static_cast<std::size_t>(w)];
      }
    }
    const AssignmentPlan plan = assign_mta(snap, Metric::PlanarEuclidean);
    CHECK(plan.size() == oracles::brute_force_matching(eligible));
  }
}

TEST_CASE("assign MI: greedy picks the highest influence first") {
  const Snapshot snap = colocated_snapshot(2, 2);
  PairScores scores;
  scores[{"w0", "s0"}] = 5.0;
  scores[{"w0", "s1"}] = 4.0;
  scores[{"w1", "s0"}] = 3.0;
  scores[{"w1", "s1"}] = 1.0;
  const AssignmentPlan plan = assign_mi(snap, scores, Metric::PlanarEuclidean);
  REQUIRE(plan.size() == 2);
  // w0 takes s0 (5.0); w1 then takes its only free task s1.
  for (const PlanEntry& entry : plan.pairs) {
    if (entry.task_id == "s0") CHECK(entry.worker_id == "w0");
    if (entry.task_id == "s1") CHECK(entry.worker_id == "w1");
  }
}

TEST_CASE("assign MI: greedy can sacrifice cardinality") {
  // w0 is eligible for both tasks, w1 only for s0. Greedy gives s0 to w0
  // (higher influence), leaving w1 idle and s1 unassigned.
  Snapshot snap;
  snap.instant = 0;
  snap.workers = {make_worker("w0", 0, 0, 3.0), make_worker("w1", 0, 2, 1.0)};
  snap.tasks = {make_task("s0", 0, 1.5), make_task("s1", 0, -1)};
  PairScores scores;
  scores[{"w0", "s0"}] = 9.0;
  scores[{"w0", "s1"}] = 1.0;
  scores[{"w1", "s0"}] = 5.0;

  const AssignmentPlan mi = assign_mi(snap, scores, Metric::PlanarEuclidean);
  const AssignmentPlan mta = assign_mta(snap, Metric::PlanarEuclidean);
  CHECK(mi.size() == 1);
  CHECK(mta.size() == 2);
  CHECK(mi.size() < mta.size());
  CHECK(mi.pairs[0].worker_id == "w0");
  CHECK(mi.pairs[0].task_id == "s0");
}

TEST_CASE("assign: flow strategies never sacrifice cardinality") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    Snapshot snap;
    snap.instant = 0;
    const int W = 2 + static_cast<int>(uniform_index(rng, 4));
    const int S = 2 + static_cast<int>(uniform_index(rng, 4));
    for (int w = 0; w < W; ++w) {
      snap.workers.push_back(
          make_worker("w" + std::to_string(w), uniform_double(rng) * 4, uniform_double(rng) * 4, 2.5));
    }
    for (int s = 0; s < S; ++s) {
      snap.tasks.push_back(
          make_task("s" + std::to_string(s), uniform_double(rng) * 4, uniform_double(rng) * 4));
    }
    PairScores scores;
    EntropyMap entropies;
    for (const auto& pair : eligible_pairs(snap, Metric::PlanarEuclidean)) {
      scores[{pair.worker_id, pair.task_id}] = uniform_double(rng) * 5;
      entropies[pair.task_id] = uniform_double(rng);
    }
    const std::size_t max_cardinality = assign_mta(snap, Metric::PlanarEuclidean).size();
    for (const Strategy strategy : {Strategy::IA, Strategy::EIA, Strategy::DIA}) {
      const AssignmentPlan plan =
          assign_with_strategy(strategy, snap, scores, entropies, Metric::PlanarEuclidean);
      CHECK(plan.size() == max_cardinality);
      // Valid matching: no repeated worker or task.
      std::set<std::string> workers, tasks;
      for (const PlanEntry& entry : plan.pairs) {
        CHECK(workers.insert(entry.worker_id).second);
        CHECK(tasks.insert(entry.task_id).second);
        CHECK(scores.count({entry.worker_id, entry.task_id}) == 1);
      }
    }
  }
}

TEST_CASE("assign IA: raising a pair's influence keeps it optimal") {
  const Snapshot snap = colocated_snapshot(3, 3);
  PairScores scores;
  for (const auto& pair : eligible_pairs(snap, Metric::PlanarEuclidean)) {
    scores[{pair.worker_id, pair.task_id}] = 1.0;
  }
  scores[{"w1", "s2"}] = 6.0;
  const AssignmentPlan base = assign_ia(snap, scores, Metric::PlanarEuclidean);
  bool pair_present = false;
  for (const PlanEntry& entry : base.pairs) {
    if (entry.worker_id == "w1" && entry.task_id == "s2") pair_present = true;
  }
  CHECK(pair_present);

  scores[{"w1", "s2"}] = 20.0;  // even better: must stay in the plan
  const AssignmentPlan raised = assign_ia(snap, scores, Metric::PlanarEuclidean);
  pair_present = false;
  for (const PlanEntry& entry : raised.pairs) {
    if (entry.worker_id == "w1" && entry.task_id == "s2") pair_present = true;
  }
  CHECK(pair_present);
}
