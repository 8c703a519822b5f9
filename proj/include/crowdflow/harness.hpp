#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdflow/affinity.hpp"
#include "crowdflow/assign.hpp"
#include "crowdflow/influence.hpp"
#include "crowdflow/ingest.hpp"
#include "crowdflow/mobility.hpp"
#include "crowdflow/propagation.hpp"

namespace crowdflow {

struct ExperimentConfig {
  std::string checkins_path;
  std::string edges_path;
  std::string output_dir = "out";

  std::vector<std::string> days;  // "YYYY-MM-DD", explicit list
  Duration granularity = 86400;

  std::vector<std::string> strategies = {"MTA", "MI", "IA", "EIA", "DIA"};

  // Influence-component switches; a disabled component contributes the
  // multiplicative identity (affinity -> 1, willingness -> 1 per worker,
  // propagation -> 1 per pair).
  bool use_affinity = true;
  bool use_willingness = true;
  bool use_propagation = true;

  // Grid axes; each combination is one run.
  std::vector<int> num_tasks = {1500};
  std::vector<int> num_workers = {1200};
  std::vector<Duration> valid_durations = {5 * 3600};
  std::vector<double> reach_radii = {25.0};

  double speed_kmh = 5.0;
  Metric metric = Metric::Haversine;
  Directedness directedness = Directedness::UndirectedAsBidirectional;

  TrainOptions lda;
  MobilityOptions mobility;
  PropagationParams propagation;
  // One shared reverse-reachable collection serves every source worker by
  // default; isolated mode resamples per worker (bound-audit setting).
  bool propagation_isolated = false;
  double entropy_radius_km = 0.001;

  std::uint64_t seed = 42;
  // Wall-clock timing is inherently nonreproducible; turning it off writes
  // zeros so repeated runs produce byte-identical files.
  bool timing = true;

  // Optional precomputed models.
  std::string affinity_model_path;
  std::string mobility_cache_path;
  std::string propagation_cache_path;
};

struct MetricsRow {
  std::string day;
  std::string strategy;
  std::size_t assigned = 0;
  double ai = 0.0;               // mean influence per assigned pair
  double ap = 0.0;               // mean outward propagation per assigned pair
  double mean_travel_km = 0.0;
  double solve_seconds = 0.0;
  std::uint64_t seed = 0;
  bool empty_plan = false;       // metrics reported as 0 with this flag
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
};

// Mean influence over assigned pairs; scores must cover every pair.
// Empty plans report 0 (callers carry the flag).
double average_influence(const AssignmentPlan& plan, const PairScores& scores);

// Mean, over assigned pairs, of the assigned worker's total outward
// informed probability (self excluded).
double average_propagation(const AssignmentPlan& plan, const PropagationMap& tables);

double mean_travel_km(const AssignmentPlan& plan);

// Fitted models shared by every instance of an experiment.
struct Models {
  TopicModel topics;
  MobilityMap mobility;
  PropagationMap propagation;
  SocialGraph graph;
  HistoryMap histories;
  std::vector<std::string> universe;  // sorted worker ids (graph ∪ check-ins)
};

Models fit_models(const std::vector<CheckinRecord>& checkins, const SocialGraph& graph,
                  const ExperimentConfig& config);

struct InfluenceInputs {
  PairScores scores;       // per eligible pair
  EntropyMap entropies;    // per task
};

// Influence for every eligible pair of the snapshot, honoring the
// component switches in `config`.
InfluenceInputs compute_influence(const Snapshot& snapshot, const Models& models,
                                  const ExperimentConfig& config);

// Full protocol: per grid point and strategy, walk the day list, sampling
// the configured number of tasks and workers, assigning, and accumulating
// metrics; a worker assigned a task is removed from subsequent instances of
// the same run. Writes metrics.csv and per-instance plan dumps under the
// output directory and returns the report.
MetricsReport run_experiment(const ExperimentConfig& config);

// metrics.csv content (header `day,strategy,assigned,...`) for a report.
std::string metrics_csv(const MetricsReport& report);
// Plan dump rows: instant,task_id,worker_id,strategy,cost,influence,distance_km.
std::string plan_csv(const AssignmentPlan& plan, Timestamp instant, const std::string& strategy);

struct ReportRow {
  std::string strategy;
  std::size_t instances = 0;
  double mean_assigned = 0.0;
  double mean_ai = 0.0;
  double mean_ap = 0.0;
  double mean_travel_km = 0.0;
  double mean_solve_seconds = 0.0;
};

// Aggregates metrics.csv files (mean per strategy across rows).
std::vector<ReportRow> aggregate_metrics(const std::vector<std::string>& metrics_files);
std::string report_csv(const std::vector<ReportRow>& rows);

// Shortest lossless decimal form; used by every CSV writer.
std::string format_double(double value);

}  // namespace crowdflow
