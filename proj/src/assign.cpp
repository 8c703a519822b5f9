#include "crowdflow/assign.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "crowdflow/errors.hpp"

namespace crowdflow {

Strategy strategy_from_string(const std::string& name) {
  if (name == "MTA") return Strategy::MTA;
  if (name == "MI") return Strategy::MI;
  if (name == "IA") return Strategy::IA;
  if (name == "EIA") return Strategy::EIA;
  if (name == "DIA") return Strategy::DIA;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::MTA: return "MTA";
    case Strategy::MI: return "MI";
    case Strategy::IA: return "IA";
    case Strategy::EIA: return "EIA";
    case Strategy::DIA: return "DIA";
  }
  throw std::invalid_argument("unknown strategy");
}

double edge_cost(Strategy strategy, double influence, double entropy, double distance_km,
                 double reach_radius_km) {
  if (influence < 0.0) throw std::invalid_argument("influence must be nonnegative");
  switch (strategy) {
    case Strategy::IA:
      return 1.0 / (influence + 1.0);
    case Strategy::EIA:
      if (entropy < 0.0) throw std::invalid_argument("entropy must be nonnegative");
      return (entropy + 1.0) / (influence + 1.0);
    case Strategy::DIA: {
      if (distance_km < 0.0) throw std::invalid_argument("distance must be nonnegative");
      if (!(reach_radius_km > 0.0)) throw std::invalid_argument("reach radius must be positive");
      const double discount = 1.0 - std::min(1.0, distance_km / reach_radius_km);
      return 1.0 / (discount * influence + 1.0);
    }
    case Strategy::MTA:
      return 0.0;
    case Strategy::MI:
      break;
  }
  throw std::invalid_argument("strategy has no edge cost");
}

namespace {

// Successive shortest augmenting paths with Johnson potentials. Node
// layout: 0 = source, 1..W workers, W+1..W+S tasks, W+S+1 = sink. All
// capacities are 1, so each augmentation moves one unit and the flow stays
// integral.
class MinCostMaxFlow {
 public:
  MinCostMaxFlow(int num_nodes, int source, int sink)
      : num_nodes_(num_nodes), source_(source), sink_(sink), adjacency_(num_nodes) {}

  int add_arc(int from, int to, int capacity, double cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({from, to, capacity, 0, cost});
    arcs_.push_back({to, from, 0, 0, -cost});
    adjacency_[static_cast<std::size_t>(from)].push_back(id);
    adjacency_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  void solve() {
    std::vector<double> potential(static_cast<std::size_t>(num_nodes_), 0.0);
    std::vector<double> dist;
    std::vector<int> parent_arc;
    while (dijkstra(potential, dist, parent_arc)) {
      for (int v = 0; v < num_nodes_; ++v) {
        const auto vs = static_cast<std::size_t>(v);
        if (dist[vs] < kInfinity) potential[vs] += dist[vs];
      }
      // Unit capacities: push exactly one unit along the path.
      for (int v = sink_; v != source_;) {
        Arc& arc = arcs_[static_cast<std::size_t>(parent_arc[static_cast<std::size_t>(v)])];
        arc.flow += 1;
        arcs_[static_cast<std::size_t>(parent_arc[static_cast<std::size_t>(v)] ^ 1)].flow -= 1;
        v = arc.from;
      }
    }
  }

  bool arc_saturated(int id) const { return arcs_[static_cast<std::size_t>(id)].flow > 0; }

 private:
  struct Arc {
    int from;
    int to;
    int capacity;
    int flow;
    double cost;
  };

  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  bool dijkstra(const std::vector<double>& potential, std::vector<double>& dist,
                std::vector<int>& parent_arc) {
    dist.assign(static_cast<std::size_t>(num_nodes_), kInfinity);
    parent_arc.assign(static_cast<std::size_t>(num_nodes_), -1);
    dist[static_cast<std::size_t>(source_)] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, source_);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      const auto us = static_cast<std::size_t>(u);
      if (d > dist[us]) continue;
      for (int id : adjacency_[us]) {
        const Arc& arc = arcs_[static_cast<std::size_t>(id)];
        if (arc.capacity - arc.flow <= 0) continue;
        const auto vs = static_cast<std::size_t>(arc.to);
        const double reduced = d + arc.cost + potential[us] - potential[vs];
        if (reduced < dist[vs]) {
          dist[vs] = reduced;
          parent_arc[vs] = id;
          heap.emplace(reduced, arc.to);
        }
      }
    }
    return dist[static_cast<std::size_t>(sink_)] < kInfinity;
  }

  int num_nodes_;
  int source_;
  int sink_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
};

struct IndexedSnapshot {
  std::vector<const Worker*> workers;      // sorted by id
  std::vector<const SpatialTask*> tasks;   // sorted by id
  std::unordered_map<std::string, int> worker_index;
  std::unordered_map<std::string, int> task_index;
  std::vector<CandidatePair> pairs;
};

IndexedSnapshot index_snapshot(const Snapshot& snapshot, Metric metric) {
  IndexedSnapshot indexed;
  indexed.pairs = eligible_pairs(snapshot, metric);
  for (const Worker& w : snapshot.workers) indexed.workers.push_back(&w);
  std::sort(indexed.workers.begin(), indexed.workers.end(),
            [](const Worker* a, const Worker* b) { return a->id < b->id; });
  for (const SpatialTask& s : snapshot.tasks) indexed.tasks.push_back(&s);
  std::sort(indexed.tasks.begin(), indexed.tasks.end(),
            [](const SpatialTask* a, const SpatialTask* b) { return a->id < b->id; });
  for (std::size_t i = 0; i < indexed.workers.size(); ++i) {
    indexed.worker_index.emplace(indexed.workers[i]->id, static_cast<int>(i));
  }
  for (std::size_t j = 0; j < indexed.tasks.size(); ++j) {
    indexed.task_index.emplace(indexed.tasks[j]->id, static_cast<int>(j));
  }
  return indexed;
}

double influence_of(const PairScores& influence, const std::string& worker_id,
                    const std::string& task_id) {
  const auto it = influence.find({worker_id, task_id});
  if (it == influence.end()) {
    throw std::invalid_argument("missing influence for pair (" + worker_id + ", " + task_id + ")");
  }
  return it->second;
}

AssignmentPlan assign_flow(Strategy strategy, const Snapshot& snapshot,
                           const PairScores* influence, const EntropyMap* entropies,
                           Metric metric) {
  const IndexedSnapshot indexed = index_snapshot(snapshot, metric);

  FlowNetwork network;
  network.num_workers = static_cast<int>(indexed.workers.size());
  network.num_tasks = static_cast<int>(indexed.tasks.size());
  struct PairInfo {
    double influence = 0.0;
    double distance = 0.0;
  };
  std::vector<PairInfo> info;
  info.reserve(indexed.pairs.size());
  for (const CandidatePair& pair : indexed.pairs) {
    const int wi = indexed.worker_index.at(pair.worker_id);
    const int ti = indexed.task_index.at(pair.task_id);
    double pair_influence = 0.0;
    double entropy = 0.0;
    if (strategy != Strategy::MTA) {
      pair_influence = influence_of(*influence, pair.worker_id, pair.task_id);
    }
    if (strategy == Strategy::EIA) {
      const auto it = entropies->find(pair.task_id);
      if (it == entropies->end()) {
        throw std::invalid_argument("missing entropy for task " + pair.task_id);
      }
      entropy = it->second;
    }
    const double reach = indexed.workers[static_cast<std::size_t>(wi)]->reach_radius_km;
    const double cost = edge_cost(strategy, pair_influence, entropy, pair.distance_km, reach);
    network.arcs.push_back({wi, ti, cost});
    info.push_back({pair_influence, pair.distance_km});
  }

  const FlowAssignment flow = solve_mcmf(network);

  std::map<std::pair<int, int>, std::size_t> arc_of_pair;
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    arc_of_pair.emplace(std::make_pair(network.arcs[a].worker, network.arcs[a].task), a);
  }

  AssignmentPlan plan;
  plan.total_cost = flow.total_cost;
  for (const auto& [wi, ti] : flow.pairs) {
    const std::size_t a = arc_of_pair.at({wi, ti});
    plan.pairs.push_back({indexed.tasks[static_cast<std::size_t>(ti)]->id,
                          indexed.workers[static_cast<std::size_t>(wi)]->id, network.arcs[a].cost,
                          info[a].influence, info[a].distance});
  }
  std::sort(plan.pairs.begin(), plan.pairs.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.task_id < b.task_id; });
  return plan;
}

}  // namespace

FlowAssignment solve_mcmf(const FlowNetwork& network) {
  const int W = network.num_workers;
  const int S = network.num_tasks;
  const int source = 0;
  const int sink = W + S + 1;
  MinCostMaxFlow solver(W + S + 2, source, sink);

  for (int w = 0; w < W; ++w) solver.add_arc(source, 1 + w, 1, 0.0);
  std::vector<int> pair_arcs;
  pair_arcs.reserve(network.arcs.size());
  for (const FlowNetwork::Arc& arc : network.arcs) {
    if (arc.worker < 0 || arc.worker >= W || arc.task < 0 || arc.task >= S) {
      throw std::invalid_argument("flow arc endpoint out of range");
    }
    if (!(arc.cost >= 0.0)) throw std::invalid_argument("flow arc cost must be nonnegative");
    pair_arcs.push_back(solver.add_arc(1 + arc.worker, 1 + W + arc.task, 1, arc.cost));
  }
  for (int s = 0; s < S; ++s) solver.add_arc(1 + W + s, sink, 1, 0.0);

  solver.solve();

  FlowAssignment result;
  for (std::size_t i = 0; i < network.arcs.size(); ++i) {
    if (solver.arc_saturated(pair_arcs[i])) {
      result.pairs.emplace_back(network.arcs[i].worker, network.arcs[i].task);
      result.total_cost += network.arcs[i].cost;
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  return result;
}

AssignmentPlan assign_ia(const Snapshot& snapshot, const PairScores& influence, Metric metric) {
  return assign_flow(Strategy::IA, snapshot, &influence, nullptr, metric);
}

AssignmentPlan assign_eia(const Snapshot& snapshot, const PairScores& influence,
                          const EntropyMap& entropies, Metric metric) {
  return assign_flow(Strategy::EIA, snapshot, &influence, &entropies, metric);
}

AssignmentPlan assign_dia(const Snapshot& snapshot, const PairScores& influence, Metric metric) {
  return assign_flow(Strategy::DIA, snapshot, &influence, nullptr, metric);
}

AssignmentPlan assign_mta(const Snapshot& snapshot, Metric metric) {
  return assign_flow(Strategy::MTA, snapshot, nullptr, nullptr, metric);
}

AssignmentPlan assign_mi(const Snapshot& snapshot, const PairScores& influence, Metric metric) {
  const IndexedSnapshot indexed = index_snapshot(snapshot, metric);

  struct Candidate {
    double influence;
    const CandidatePair* pair;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(indexed.pairs.size());
  for (const CandidatePair& pair : indexed.pairs) {
    candidates.push_back({influence_of(influence, pair.worker_id, pair.task_id), &pair});
  }
  // Influence descending; eligible pairs are already (worker id, task id)
  // sorted, so stable_sort keeps that order among ties.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.influence > b.influence; });

  std::unordered_map<std::string, bool> worker_taken;
  std::unordered_map<std::string, bool> task_taken;
  AssignmentPlan plan;
  for (const Candidate& c : candidates) {
    if (worker_taken[c.pair->worker_id] || task_taken[c.pair->task_id]) continue;
    worker_taken[c.pair->worker_id] = true;
    task_taken[c.pair->task_id] = true;
    plan.pairs.push_back({c.pair->task_id, c.pair->worker_id, 0.0, c.influence, c.pair->distance_km});
  }
  std::sort(plan.pairs.begin(), plan.pairs.end(),
            [](const PlanEntry& a, const PlanEntry& b) { return a.task_id < b.task_id; });
  return plan;
}

AssignmentPlan assign_with_strategy(Strategy strategy, const Snapshot& snapshot,
                                    const PairScores& influence, const EntropyMap& entropies,
                                    Metric metric) {
  switch (strategy) {
    case Strategy::MTA: return assign_mta(snapshot, metric);
    case Strategy::MI: return assign_mi(snapshot, influence, metric);
    case Strategy::IA: return assign_ia(snapshot, influence, metric);
    case Strategy::EIA: return assign_eia(snapshot, influence, entropies, metric);
    case Strategy::DIA: return assign_dia(snapshot, influence, metric);
  }
  throw std::invalid_argument("unknown strategy");
}

}  // namespace crowdflow
