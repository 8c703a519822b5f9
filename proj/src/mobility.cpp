#include "crowdflow/mobility.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "crowdflow/errors.hpp"

namespace crowdflow {

namespace {

using nlohmann::json;

void check_row_stochastic(const Matrix& matrix) {
  const std::size_t n = matrix.size();
  if (n == 0) throw std::invalid_argument("empty matrix");
  for (const auto& row : matrix) {
    if (row.size() != n) throw std::invalid_argument("matrix is not square");
    double sum = 0.0;
    for (double x : row) {
      if (x < 0.0) throw std::invalid_argument("matrix has a negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("matrix row does not sum to 1");
  }
}

}  // namespace

std::vector<GeoPoint> distinct_locations(const History& history, Metric metric,
                                         double same_location_km) {
  std::vector<GeoPoint> locations;
  for (const HistoryRecord& rec : history) {
    bool known = false;
    for (const GeoPoint& loc : locations) {
      if (distance_km(loc, rec.location, metric) < same_location_km) {
        known = true;
        break;
      }
    }
    if (!known) locations.push_back(rec.location);
  }
  return locations;
}

Matrix build_transition_matrix(const History& history, Metric metric, double same_location_km) {
  if (history.empty()) throw std::invalid_argument("cannot build a walk matrix from an empty history");
  const std::size_t n = distinct_locations(history, metric, same_location_km).size();
  // Every column's location was performed at, so each weight is 1 before
  // row normalization.
  return Matrix(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::vector<double> stationary_distribution(const Matrix& matrix, double restart,
                                            double tolerance, const std::vector<double>& start) {
  check_row_stochastic(matrix);
  if (!(restart >= 0.0 && restart < 1.0)) {
    throw std::invalid_argument("restart probability must lie in [0, 1)");
  }
  const std::size_t n = matrix.size();
  const double uniform = 1.0 / static_cast<double>(n);

  std::vector<double> p;
  if (start.empty()) {
    p.assign(n, uniform);
  } else {
    if (start.size() != n) throw std::invalid_argument("start vector size mismatch");
    p = start;
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
  }

  std::vector<double> next(n, 0.0);
  const int max_iterations = 1000000;
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(next.begin(), next.end(), restart * uniform);
    for (std::size_t i = 0; i < n; ++i) {
      const double scaled = (1.0 - restart) * p[i];
      if (scaled == 0.0) continue;
      const auto& row = matrix[i];
      for (std::size_t j = 0; j < n; ++j) next[j] += scaled * row[j];
    }
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) residual = std::max(residual, std::abs(next[j] - p[j]));
    p.swap(next);
    if (residual < tolerance) break;
  }
  double sum = 0.0;
  for (double x : p) sum += x;
  for (double& x : p) x /= sum;
  return p;
}

ParetoFit pareto_shape_mle(const History& history, Metric metric, double shape_fallback) {
  ParetoFit fit;
  if (history.size() < 2) {
    fit.shape = shape_fallback;
    fit.degenerate = true;
    return fit;
  }
  double log_sum = 0.0;
  for (std::size_t i = 0; i + 1 < history.size(); ++i) {
    const double x = distance_km(history[i].location, history[i + 1].location, metric) + 1.0;
    log_sum += std::log(x);
  }
  if (log_sum <= 0.0) {
    fit.shape = shape_fallback;
    fit.degenerate = true;
    return fit;
  }
  fit.shape = static_cast<double>(history.size() - 1) / log_sum;
  return fit;
}

MobilityModel fit_mobility(const std::string& worker_id, const History& history,
                           const MobilityOptions& options) {
  if (history.empty()) throw std::invalid_argument("worker " + worker_id + " has an empty history");
  MobilityModel model;
  model.worker_id = worker_id;
  model.visited_locations = distinct_locations(history, options.metric, options.same_location_km);
  const Matrix walk = build_transition_matrix(history, options.metric, options.same_location_km);
  model.stationary = stationary_distribution(walk, options.restart, options.tolerance);
  const ParetoFit fit = pareto_shape_mle(history, options.metric, options.shape_fallback);
  model.pareto_shape = fit.shape;
  model.degenerate_shape = fit.degenerate;
  return model;
}

double willingness(const MobilityModel& model, const GeoPoint& task_location, Metric metric) {
  double sum = 0.0;
  for (std::size_t i = 0; i < model.visited_locations.size(); ++i) {
    const double d = distance_km(model.visited_locations[i], task_location, metric);
    sum += model.stationary[i] * std::pow(d + 1.0, -model.pareto_shape);
  }
  return sum;
}

void save_mobility_models(const MobilityMap& models,
                          const std::map<std::string, std::uint64_t>& history_hashes,
                          const std::string& path) {
  json entries = json::object();
  for (const auto& [id, model] : models) {
    json locations = json::array();
    for (const GeoPoint& p : model.visited_locations) {
      locations.push_back({p.lat, p.lon});
    }
    const auto it = history_hashes.find(id);
    entries[id] = {
        {"history_hash", it == history_hashes.end() ? 0 : it->second},
        {"locations", locations},
        {"stationary", model.stationary},
        {"pareto_shape", model.pareto_shape},
        {"degenerate_shape", model.degenerate_shape},
    };
  }
  json j;
  j["format"] = "crowdflow-mobility";
  j["version"] = 1;
  j["models"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mobility cache: " + path);
  out << j.dump();
}

MobilityMap load_mobility_models(const std::string& path,
                                 const std::map<std::string, std::uint64_t>& history_hashes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mobility cache: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("invalid mobility cache " + path + ": " + e.what());
  }
  if (j.value("format", "") != "crowdflow-mobility" || j.value("version", 0) != 1) {
    throw DataError("unrecognized mobility cache format: " + path);
  }
  MobilityMap models;
  for (const auto& [id, entry] : j.at("models").items()) {
    const auto it = history_hashes.find(id);
    if (it == history_hashes.end()) continue;
    if (entry.at("history_hash").get<std::uint64_t>() != it->second) continue;  // stale
    MobilityModel model;
    model.worker_id = id;
    for (const auto& p : entry.at("locations")) {
      model.visited_locations.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    model.stationary = entry.at("stationary").get<std::vector<double>>();
    model.pareto_shape = entry.at("pareto_shape").get<double>();
    model.degenerate_shape = entry.at("degenerate_shape").get<bool>();
    models.emplace(id, std::move(model));
  }
  return models;
}

}  // namespace crowdflow
