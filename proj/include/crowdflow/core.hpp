#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crowdflow/geo.hpp"

namespace crowdflow {

using Timestamp = std::int64_t;  // seconds since epoch
using Duration = std::int64_t;   // seconds

// A location-bound task with an expiry deadline and category labels.
struct SpatialTask {
  std::string id;
  GeoPoint location;
  Timestamp publication_time = 0;
  Duration valid_duration = 0;            // > 0
  std::set<std::string> categories;       // nonempty

  Timestamp deadline() const { return publication_time + valid_duration; }
};

struct Worker {
  std::string id;
  GeoPoint location;
  double reach_radius_km = 0.0;  // > 0
  double speed_kmh = 0.0;        // > 0
};

// Workers and still-valid tasks available at one time instance.
struct Snapshot {
  Timestamp instant = 0;
  std::vector<Worker> workers;
  std::vector<SpatialTask> tasks;
};

// An eligible worker/task combination: the task lies inside the worker's
// reach and can be arrived at before it expires.
struct CandidatePair {
  std::string worker_id;
  std::string task_id;
  double distance_km = 0.0;
  double travel_seconds = 0.0;
};

void validate_task(const SpatialTask& task);
void validate_worker(const Worker& worker);

// Checks both member invariants and snapshot-level ones (unique ids, every
// task valid at the instant). Throws DataError on violation.
void validate_snapshot(const Snapshot& snapshot);

// All pairs satisfying d(w,s) <= w.r and instant + travel <= deadline,
// sorted by (worker id, task id).
std::vector<CandidatePair> eligible_pairs(const Snapshot& snapshot,
                                          Metric metric = Metric::Haversine);

}  // namespace crowdflow
