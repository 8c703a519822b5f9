#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdflow/ingest.hpp"
#include "crowdflow/rng.hpp"

namespace crowdflow {

// Accuracy/confidence knobs for the adaptive reverse-reachable sampler.
struct PropagationParams {
  double eps = 0.1;                  // in (0, 1)
  double confidence_exponent = 1.0;  // >= 1
  // Pairwise estimates are (|W|/N) * coverage-count by default; fraction
  // mode divides coverage within the root's own sets instead.
  bool fraction_mode = false;

  double eps_star() const { return std::sqrt(2.0) * eps; }
  double failure_probability(int num_workers) const;        // 1 / |W|^o
  double per_test_failure_probability(int num_workers) const;  // 1 / (|W|^o log2 |W|)
  void validate() const;
};

// One sampled reverse-reachable set: the workers that reach `root` in a
// live-edge subgraph drawn under the cascade model.
struct ReverseReachableSet {
  int root = 0;
  std::vector<int> members;  // sorted; always contains root
};

// A multiset of reverse-reachable sets with root and coverage bookkeeping.
struct RrrCollection {
  int num_workers = 0;
  std::vector<ReverseReachableSet> sets;
  std::vector<std::vector<int>> sets_by_root;   // worker -> indices rooted there
  std::vector<std::vector<int>> covering_sets;  // worker -> indices containing it

  // Sampler diagnostics.
  bool threshold_triggered = false;  // false: schedule exhausted, fallback size
  std::int64_t final_k = 0;
  double gamma = 0.0;
  double sigma_lower_bound = 0.0;
  std::uint64_t iteration_bound = 0;  // last N_R(k)
  std::uint64_t threshold_bound = 0;  // N_R'(gamma), when triggered

  std::size_t size() const { return sets.size(); }
  void add(ReverseReachableSet set);
  // Fraction of sets containing the worker.
  double coverage_fraction(int worker) const;
};

// One forward cascade from `seed`: every newly informed worker gets a
// single chance to inform each out-neighbour with the edge probability.
// Returns the sorted informed set including the seed.
std::vector<int> simulate_cascade(const SocialGraph& graph, int seed_worker, Rng& rng);

// Uniform random root, then reverse traversal where each edge u->v is
// crossed from v to u with the edge probability, each edge at most once.
ReverseReachableSet sample_reverse_reachable(const SocialGraph& graph, Rng& rng);

// Samples required so that, when the maximum coverage stays below
// gamma = (1 + eps*) k, the true maximum informed range is below k with
// high probability. Ceiling of
//   (2 + 2/3 eps*) (ln |W| + ln(1/lambda*)) |W| / (eps*^2 k).
double iteration_sample_bound_raw(std::int64_t k, const PropagationParams& params,
                                  int num_workers);
std::uint64_t iteration_sample_bound(std::int64_t k, const PropagationParams& params,
                                     int num_workers);

// Samples required for a (1 - eps)-accurate informed range given a
// certified lower bound on it. Ceiling of 2 |W| ln(1/lambda) / (sigma eps^2).
double threshold_sample_bound_raw(double sigma_lower, const PropagationParams& params,
                                  int num_workers);
std::uint64_t threshold_sample_bound(double sigma_lower, const PropagationParams& params,
                                     int num_workers);

// Adaptive sampling: walk k down the schedule {|W|/2, |W|/4, ..., 2},
// generating the iteration bound of sets per round, until the maximum
// scaled coverage reaches gamma; then top the collection up to the
// threshold bound computed from the certified range lower bound. The
// resulting collection is valid for reading out any source worker.
RrrCollection build_collection(const SocialGraph& graph, const PropagationParams& params,
                               Rng& rng);

// Estimated number of workers informed by `worker`:
// |W| * (sets containing worker) / N.
double informed_range(const RrrCollection& collection, int worker);

// Pairwise informed probabilities from one source worker to every worker.
struct PropagationTable {
  std::string source_id;
  int source = 0;
  std::vector<double> raw;      // scaled coverage, may exceed 1 on small graphs
  std::vector<double> clamped;  // raw clipped to [0, 1]; self entry is 1
};

PropagationTable propagation_table(const RrrCollection& collection, int source,
                                   const SocialGraph& graph,
                                   const PropagationParams& params);

// Single-source convenience: a fresh adaptive collection plus a readout.
PropagationTable propagation_for(const SocialGraph& graph, int source,
                                 const PropagationParams& params, Rng& rng);

using PropagationMap = std::map<std::string, PropagationTable>;

// Cache keyed by (graph content hash, params, seed); exact round-trip.
void save_propagation_tables(const PropagationMap& tables, std::uint64_t graph_hash,
                             const PropagationParams& params, std::uint64_t seed,
                             const std::string& path);
// Empty result when the key does not match.
PropagationMap load_propagation_tables(const std::string& path, std::uint64_t graph_hash,
                                       const PropagationParams& params, std::uint64_t seed);

}  // namespace crowdflow
