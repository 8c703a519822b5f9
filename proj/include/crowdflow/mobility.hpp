#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdflow/geo.hpp"
#include "crowdflow/ingest.hpp"

namespace crowdflow {

using Matrix = std::vector<std::vector<double>>;

struct MobilityOptions {
  Metric metric = Metric::Haversine;
  double restart = 0.15;
  double tolerance = 1e-10;
  double same_location_km = 0.001;  // two points closer than 1 m coincide
  double shape_fallback = 10.0;     // steep decay for workers who never moved
};

// Per-worker movement model: stationary distribution over the distinct
// locations of the worker's history plus a fitted distance-decay shape.
struct MobilityModel {
  std::string worker_id;
  std::vector<GeoPoint> visited_locations;  // order of first appearance
  std::vector<double> stationary;           // sums to 1
  double pareto_shape = 0.0;                // > 0; scale is fixed at 1
  bool degenerate_shape = false;            // fallback shape applied
};

std::vector<GeoPoint> distinct_locations(const History& history, Metric metric,
                                         double same_location_km);

// Row-stochastic walk matrix over the distinct locations of the history;
// an entry (i, j) is 1/n whenever the worker performed a task at the j-th
// location, which holds for every j here by construction.
Matrix build_transition_matrix(const History& history, Metric metric,
                               double same_location_km = 0.001);

// Fixed point of p = (1 - restart) * M^T p + restart * u by power
// iteration, where u is uniform. `start` overrides the uniform start
// vector (the fixed point does not depend on it).
std::vector<double> stationary_distribution(const Matrix& matrix, double restart,
                                            double tolerance,
                                            const std::vector<double>& start = {});

struct ParetoFit {
  double shape = 0.0;
  bool degenerate = false;
};

// Closed-form MLE of the decay shape from consecutive hop distances
// x_i = d(s_i, s_{i+1}) + 1: shape = (n - 1) / sum(ln x_i). Histories with
// fewer than two records or with all hops of length zero fall back to
// `shape_fallback`.
ParetoFit pareto_shape_mle(const History& history, Metric metric,
                           double shape_fallback = 10.0);

MobilityModel fit_mobility(const std::string& worker_id, const History& history,
                           const MobilityOptions& options);

// Probability that the worker visits `task_location`:
// sum_i stationary_i * (d(loc_i, task) + 1)^(-shape). Always in (0, 1].
double willingness(const MobilityModel& model, const GeoPoint& task_location,
                   Metric metric);

using MobilityMap = std::map<std::string, MobilityModel>;

// Cache keyed by a content hash of each worker's history.
void save_mobility_models(const MobilityMap& models,
                          const std::map<std::string, std::uint64_t>& history_hashes,
                          const std::string& path);
// Returns only the cached models whose stored hash matches `history_hashes`.
MobilityMap load_mobility_models(const std::string& path,
                                 const std::map<std::string, std::uint64_t>& history_hashes);

}  // namespace crowdflow
