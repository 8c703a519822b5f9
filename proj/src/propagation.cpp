#include "crowdflow/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "crowdflow/errors.hpp"

namespace crowdflow {

namespace {

using nlohmann::json;

}  // namespace

double PropagationParams::failure_probability(int num_workers) const {
  return std::pow(static_cast<double>(num_workers), -confidence_exponent);
}

double PropagationParams::per_test_failure_probability(int num_workers) const {
  const double w = static_cast<double>(num_workers);
  return 1.0 / (std::pow(w, confidence_exponent) * std::log2(w));
}

void PropagationParams::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (!(confidence_exponent >= 1.0)) {
    throw std::invalid_argument("confidence exponent must be >= 1");
  }
}

void RrrCollection::add(ReverseReachableSet set) {
  const int index = static_cast<int>(sets.size());
  sets_by_root[static_cast<std::size_t>(set.root)].push_back(index);
  for (int member : set.members) {
    covering_sets[static_cast<std::size_t>(member)].push_back(index);
  }
  sets.push_back(std::move(set));
}

double RrrCollection::coverage_fraction(int worker) const {
  if (sets.empty()) return 0.0;
  return static_cast<double>(covering_sets[static_cast<std::size_t>(worker)].size()) /
         static_cast<double>(sets.size());
}

std::vector<int> simulate_cascade(const SocialGraph& graph, int seed_worker, Rng& rng) {
  const int n = graph.num_workers();
  if (seed_worker < 0 || seed_worker >= n) {
    throw std::invalid_argument("cascade seed is not a graph worker");
  }
  std::vector<char> informed(static_cast<std::size_t>(n), 0);
  std::vector<int> frontier{seed_worker};
  std::vector<int> result{seed_worker};
  informed[static_cast<std::size_t>(seed_worker)] = 1;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier) {
      for (const SocialGraph::Edge& e : graph.out_edges(u)) {
        if (informed[static_cast<std::size_t>(e.to)]) continue;
        if (bernoulli(rng, e.probability)) {
          informed[static_cast<std::size_t>(e.to)] = 1;
          next.push_back(e.to);
          result.push_back(e.to);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(result.begin(), result.end());
  return result;
}

ReverseReachableSet sample_reverse_reachable(const SocialGraph& graph, Rng& rng) {
  const int n = graph.num_workers();
  if (n == 0) throw std::invalid_argument("cannot sample from an empty graph");
  ReverseReachableSet set;
  set.root = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  std::vector<char> reached(static_cast<std::size_t>(n), 0);
  reached[static_cast<std::size_t>(set.root)] = 1;
  std::vector<int> frontier{set.root};
  set.members.push_back(set.root);
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int v : frontier) {
      // Each original edge u->v is crossed backwards at most once, when v
      // leaves the frontier.
      for (const SocialGraph::Edge& e : graph.in_edges(v)) {
        if (reached[static_cast<std::size_t>(e.to)]) continue;
        if (bernoulli(rng, e.probability)) {
          reached[static_cast<std::size_t>(e.to)] = 1;
          next.push_back(e.to);
          set.members.push_back(e.to);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(set.members.begin(), set.members.end());
  return set;
}

double iteration_sample_bound_raw(std::int64_t k, const PropagationParams& params,
                                  int num_workers) {
  params.validate();
  if (k < 2) throw std::invalid_argument("schedule value k must be >= 2");
  if (num_workers < 2) throw std::invalid_argument("need at least two workers");
  const double w = static_cast<double>(num_workers);
  const double es = params.eps_star();
  const double lambda_star = params.per_test_failure_probability(num_workers);
  return (2.0 + 2.0 / 3.0 * es) * (std::log(w) + std::log(1.0 / lambda_star)) * w /
         (es * es * static_cast<double>(k));
}

std::uint64_t iteration_sample_bound(std::int64_t k, const PropagationParams& params,
                                     int num_workers) {
  return static_cast<std::uint64_t>(std::ceil(iteration_sample_bound_raw(k, params, num_workers)));
}

double threshold_sample_bound_raw(double sigma_lower, const PropagationParams& params,
                                  int num_workers) {
  params.validate();
  if (!(sigma_lower > 0.0)) throw std::invalid_argument("range lower bound must be positive");
  const double w = static_cast<double>(num_workers);
  const double lambda = params.failure_probability(num_workers);
  return 2.0 * w * std::log(1.0 / lambda) / (sigma_lower * params.eps * params.eps);
}

std::uint64_t threshold_sample_bound(double sigma_lower, const PropagationParams& params,
                                     int num_workers) {
  return static_cast<std::uint64_t>(
      std::ceil(threshold_sample_bound_raw(sigma_lower, params, num_workers)));
}

RrrCollection build_collection(const SocialGraph& graph, const PropagationParams& params,
                               Rng& rng) {
  params.validate();
  const int n = graph.num_workers();
  if (n == 0) throw std::invalid_argument("cannot sample from an empty graph");

  RrrCollection collection;
  collection.num_workers = n;
  collection.sets_by_root.assign(static_cast<std::size_t>(n), {});
  collection.covering_sets.assign(static_cast<std::size_t>(n), {});

  if (n == 1) {
    // Degenerate universe: the only possible set.
    collection.add(sample_reverse_reachable(graph, rng));
    collection.final_k = 1;
    return collection;
  }

  const auto clear_sets = [&] {
    collection.sets.clear();
    for (auto& v : collection.sets_by_root) v.clear();
    for (auto& v : collection.covering_sets) v.clear();
  };

  std::int64_t k = std::max<std::int64_t>(2, n / 2);
  while (true) {
    const std::uint64_t need = iteration_sample_bound(k, params, n);
    collection.iteration_bound = need;
    collection.final_k = k;
    while (collection.size() < need) {
      collection.add(sample_reverse_reachable(graph, rng));
    }

    // Maximum scaled coverage over all workers.
    double coverage_opt = 0.0;
    for (int w = 0; w < n; ++w) {
      coverage_opt = std::max(
          coverage_opt, static_cast<double>(collection.covering_sets[static_cast<std::size_t>(w)].size()));
    }
    const double n_p_opt =
        static_cast<double>(n) * coverage_opt / static_cast<double>(collection.size());
    const double gamma = (1.0 + params.eps_star()) * static_cast<double>(k);
    collection.gamma = gamma;

    if (n_p_opt >= gamma) {
      collection.threshold_triggered = true;
      collection.sigma_lower_bound = n_p_opt * static_cast<double>(k) / gamma;
      collection.threshold_bound = threshold_sample_bound(collection.sigma_lower_bound, params, n);
      break;
    }
    if (k == 2) {
      // Schedule exhausted: keep the final round's sets as the sample.
      collection.threshold_triggered = false;
      break;
    }
    clear_sets();
    k = std::max<std::int64_t>(2, k / 2);
  }

  while (collection.threshold_triggered && collection.size() < collection.threshold_bound) {
    collection.add(sample_reverse_reachable(graph, rng));
  }
  return collection;
}

double informed_range(const RrrCollection& collection, int worker) {
  if (collection.sets.empty()) throw std::invalid_argument("empty collection");
  if (worker < 0 || worker >= collection.num_workers) {
    throw std::invalid_argument("worker index out of range");
  }
  return static_cast<double>(collection.num_workers) *
         static_cast<double>(collection.covering_sets[static_cast<std::size_t>(worker)].size()) /
         static_cast<double>(collection.size());
}

PropagationTable propagation_table(const RrrCollection& collection, int source,
                                   const SocialGraph& graph, const PropagationParams& params) {
  const int n = collection.num_workers;
  if (source < 0 || source >= n) throw std::invalid_argument("source index out of range");
  if (collection.sets.empty()) throw std::invalid_argument("empty collection");

  PropagationTable table;
  table.source = source;
  table.source_id = graph.id_of(source);
  table.raw.assign(static_cast<std::size_t>(n), 0.0);
  table.clamped.assign(static_cast<std::size_t>(n), 0.0);

  std::vector<std::int64_t> count_by_root(static_cast<std::size_t>(n), 0);
  for (int set_index : collection.covering_sets[static_cast<std::size_t>(source)]) {
    ++count_by_root[static_cast<std::size_t>(collection.sets[static_cast<std::size_t>(set_index)].root)];
  }

  const double scale = static_cast<double>(n) / static_cast<double>(collection.size());
  for (int i = 0; i < n; ++i) {
    if (i == source) continue;
    const auto is = static_cast<std::size_t>(i);
    double value = 0.0;
    if (params.fraction_mode) {
      const std::size_t rooted = collection.sets_by_root[is].size();
      value = rooted == 0 ? 0.0
                          : static_cast<double>(count_by_root[is]) / static_cast<double>(rooted);
    } else {
      value = scale * static_cast<double>(count_by_root[is]);
    }
    table.raw[is] = value;
    table.clamped[is] = std::clamp(value, 0.0, 1.0);
  }
  table.raw[static_cast<std::size_t>(source)] = 1.0;
  table.clamped[static_cast<std::size_t>(source)] = 1.0;
  return table;
}

PropagationTable propagation_for(const SocialGraph& graph, int source,
                                 const PropagationParams& params, Rng& rng) {
  const RrrCollection collection = build_collection(graph, params, rng);
  return propagation_table(collection, source, graph, params);
}

void save_propagation_tables(const PropagationMap& tables, std::uint64_t graph_hash,
                             const PropagationParams& params, std::uint64_t seed,
                             const std::string& path) {
  json entries = json::object();
  for (const auto& [id, table] : tables) {
    entries[id] = {
        {"source", table.source},
        {"raw", table.raw},
        {"clamped", table.clamped},
    };
  }
  json j;
  j["format"] = "crowdflow-propagation";
  j["version"] = 1;
  j["graph_hash"] = graph_hash;
  j["eps"] = params.eps;
  j["confidence_exponent"] = params.confidence_exponent;
  j["fraction_mode"] = params.fraction_mode;
  j["seed"] = seed;
  j["tables"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write propagation cache: " + path);
  out << j.dump();
}

PropagationMap load_propagation_tables(const std::string& path, std::uint64_t graph_hash,
                                       const PropagationParams& params, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open propagation cache: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("invalid propagation cache " + path + ": " + e.what());
  }
  PropagationMap tables;
  if (j.value("format", "") != "crowdflow-propagation" || j.value("version", 0) != 1) {
    throw DataError("unrecognized propagation cache format: " + path);
  }
  if (j.at("graph_hash").get<std::uint64_t>() != graph_hash ||
      j.at("eps").get<double>() != params.eps ||
      j.at("confidence_exponent").get<double>() != params.confidence_exponent ||
      j.at("fraction_mode").get<bool>() != params.fraction_mode ||
      j.at("seed").get<std::uint64_t>() != seed) {
    return tables;  // stale key
  }
  for (const auto& [id, entry] : j.at("tables").items()) {
    PropagationTable table;
    table.source_id = id;
    table.source = entry.at("source").get<int>();
    table.raw = entry.at("raw").get<std::vector<double>>();
    table.clamped = entry.at("clamped").get<std::vector<double>>();
    tables.emplace(id, std::move(table));
  }
  return tables;
}

}  // namespace crowdflow
