#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crowdflow/core.hpp"

namespace crowdflow {

enum class Strategy { MTA, MI, IA, EIA, DIA };

Strategy strategy_from_string(const std::string& name);
std::string to_string(Strategy strategy);

// Arc cost of a worker->task edge under the given strategy:
//   IA   1 / (influence + 1)
//   EIA  (entropy + 1) / (influence + 1)
//   DIA  1 / (F * influence + 1),  F = 1 - min(1, distance / reach)
//   MTA  0
// MI is greedy and has no arc cost (std::invalid_argument).
double edge_cost(Strategy strategy, double influence, double entropy,
                 double distance_km, double reach_radius_km);

// Unit-capacity assignment network: source -> workers -> tasks -> sink.
struct FlowNetwork {
  int num_workers = 0;
  int num_tasks = 0;
  struct Arc {
    int worker = 0;  // index into the worker ordering
    int task = 0;    // index into the task ordering
    double cost = 0.0;
  };
  std::vector<Arc> arcs;  // sorted by (worker, task)
};

struct FlowAssignment {
  std::vector<std::pair<int, int>> pairs;  // (worker index, task index)
  double total_cost = 0.0;
};

// Min-cost max-flow by successive shortest paths with node potentials.
// Capacities are all 1, so the optimum is integral; among maximum flows the
// total arc cost is minimal. Deterministic for a fixed arc order.
FlowAssignment solve_mcmf(const FlowNetwork& network);

struct PlanEntry {
  std::string task_id;
  std::string worker_id;
  double cost = 0.0;
  double influence = 0.0;
  double distance_km = 0.0;
};

// A matching: each worker and each task appears at most once.
struct AssignmentPlan {
  std::vector<PlanEntry> pairs;
  double total_cost = 0.0;

  std::size_t size() const { return pairs.size(); }
};

// (worker id, task id) -> influence value for every eligible pair.
using PairScores = std::map<std::pair<std::string, std::string>, double>;
// task id -> location entropy.
using EntropyMap = std::map<std::string, double>;

AssignmentPlan assign_ia(const Snapshot& snapshot, const PairScores& influence,
                         Metric metric = Metric::Haversine);
AssignmentPlan assign_eia(const Snapshot& snapshot, const PairScores& influence,
                          const EntropyMap& entropies, Metric metric = Metric::Haversine);
AssignmentPlan assign_dia(const Snapshot& snapshot, const PairScores& influence,
                          Metric metric = Metric::Haversine);

// Maximum-cardinality matching only; all arc costs zero.
AssignmentPlan assign_mta(const Snapshot& snapshot, Metric metric = Metric::Haversine);

// Greedy: eligible pairs by influence descending (ties by worker id then
// task id), accepting a pair when both endpoints are still free.
AssignmentPlan assign_mi(const Snapshot& snapshot, const PairScores& influence,
                         Metric metric = Metric::Haversine);

AssignmentPlan assign_with_strategy(Strategy strategy, const Snapshot& snapshot,
                                    const PairScores& influence, const EntropyMap& entropies,
                                    Metric metric = Metric::Haversine);

}  // namespace crowdflow
