#include "crowdflow/influence.hpp"

#include <cmath>
#include <stdexcept>

namespace crowdflow {

double worker_task_influence(double p_aff, const std::vector<double>& willingness,
                             const std::vector<double>& propagation, int self_index) {
  if (willingness.size() != propagation.size()) {
    throw std::invalid_argument("willingness and propagation range over different universes");
  }
  if (self_index < 0 || static_cast<std::size_t>(self_index) >= willingness.size()) {
    throw std::invalid_argument("self index outside the worker universe");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < willingness.size(); ++i) {
    if (i == static_cast<std::size_t>(self_index)) continue;
    sum += willingness[i] * propagation[i];
  }
  return p_aff * sum;
}

InfluenceScore make_influence_score(const std::string& worker_id, const std::string& task_id,
                                    double p_aff, const std::vector<double>& willingness,
                                    const std::vector<double>& propagation, int self_index) {
  InfluenceScore score;
  score.worker_id = worker_id;
  score.task_id = task_id;
  score.p_aff = p_aff;
  score.willingness_sum = worker_task_influence(1.0, willingness, propagation, self_index);
  score.value = p_aff * score.willingness_sum;
  return score;
}

double entropy_from_counts(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw std::invalid_argument("negative visit count");
    total += c;
  }
  if (total <= 0.0) return 0.0;
  double entropy = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    entropy -= p * std::log(p);
  }
  return entropy;
}

LocationEntropy location_entropy(const HistoryMap& histories, const std::string& task_id,
                                 const GeoPoint& task_location, double radius_km, Metric metric) {
  LocationEntropy result;
  result.task_id = task_id;
  for (const auto& [worker_id, history] : histories) {
    double visits = 0.0;
    for (const HistoryRecord& rec : history) {
      if (distance_km(rec.location, task_location, metric) <= radius_km) visits += 1.0;
    }
    if (visits > 0.0) {
      result.visits_by_worker.emplace(worker_id, visits);
      result.total_visits += visits;
    }
  }
  std::vector<double> counts;
  counts.reserve(result.visits_by_worker.size());
  for (const auto& [id, c] : result.visits_by_worker) counts.push_back(c);
  result.entropy = entropy_from_counts(counts);
  return result;
}

}  // namespace crowdflow
