#pragma once

#include <map>
#include <string>
#include <vector>

#include "crowdflow/geo.hpp"
#include "crowdflow/ingest.hpp"

namespace crowdflow {

// Composite worker-task score: affinity times the propagation-weighted
// willingness of every other worker.
struct InfluenceScore {
  std::string worker_id;
  std::string task_id;
  double p_aff = 0.0;
  double willingness_sum = 0.0;
  double value = 0.0;  // p_aff * willingness_sum
};

// willingness[i] and propagation[i] must range over the same worker
// universe; the entry at `self_index` is excluded from the sum. Throws
// std::invalid_argument on size mismatch.
double worker_task_influence(double p_aff, const std::vector<double>& willingness,
                             const std::vector<double>& propagation, int self_index);

InfluenceScore make_influence_score(const std::string& worker_id, const std::string& task_id,
                                    double p_aff, const std::vector<double>& willingness,
                                    const std::vector<double>& propagation, int self_index);

struct LocationEntropy {
  std::string task_id;
  double entropy = 0.0;
  double total_visits = 0.0;
  std::map<std::string, double> visits_by_worker;
};

// Shannon entropy (natural log) of a visit-count distribution.
double entropy_from_counts(const std::vector<double>& counts);

// Entropy of the per-worker visit distribution within `radius_km` of the
// task location; zero when nobody ever visited.
LocationEntropy location_entropy(const HistoryMap& histories, const std::string& task_id,
                                 const GeoPoint& task_location, double radius_km,
                                 Metric metric);

}  // namespace crowdflow
