#include "crowdflow/core.hpp"

#include <algorithm>
#include <unordered_set>

#include "crowdflow/errors.hpp"

namespace crowdflow {

namespace {

void check_point(const GeoPoint& p, const std::string& what) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
    throw DataError(what + ": coordinate out of range");
  }
}

}  // namespace

void validate_task(const SpatialTask& task) {
  check_point(task.location, "task " + task.id);
  if (task.valid_duration <= 0) {
    throw DataError("task " + task.id + ": valid_duration must be positive");
  }
  if (task.categories.empty()) {
    throw DataError("task " + task.id + ": categories must be nonempty");
  }
}

void validate_worker(const Worker& worker) {
  check_point(worker.location, "worker " + worker.id);
  if (!(worker.reach_radius_km > 0.0)) {
    throw DataError("worker " + worker.id + ": reach radius must be positive");
  }
  if (!(worker.speed_kmh > 0.0)) {
    throw DataError("worker " + worker.id + ": speed must be positive");
  }
}

void validate_snapshot(const Snapshot& snapshot) {
  std::unordered_set<std::string> seen;
  for (const Worker& w : snapshot.workers) {
    validate_worker(w);
    if (!seen.insert(w.id).second) {
      throw DataError("duplicate worker id in snapshot: " + w.id);
    }
  }
  seen.clear();
  for (const SpatialTask& s : snapshot.tasks) {
    validate_task(s);
    if (!seen.insert(s.id).second) {
      throw DataError("duplicate task id in snapshot: " + s.id);
    }
    if (!(s.publication_time <= snapshot.instant && snapshot.instant < s.deadline())) {
      throw DataError("task " + s.id + " is not valid at the snapshot instant");
    }
  }
}

std::vector<CandidatePair> eligible_pairs(const Snapshot& snapshot, Metric metric) {
  validate_snapshot(snapshot);

  std::vector<const Worker*> workers;
  workers.reserve(snapshot.workers.size());
  for (const Worker& w : snapshot.workers) workers.push_back(&w);
  std::sort(workers.begin(), workers.end(),
            [](const Worker* a, const Worker* b) { return a->id < b->id; });

  std::vector<const SpatialTask*> tasks;
  tasks.reserve(snapshot.tasks.size());
  for (const SpatialTask& s : snapshot.tasks) tasks.push_back(&s);
  std::sort(tasks.begin(), tasks.end(),
            [](const SpatialTask* a, const SpatialTask* b) { return a->id < b->id; });

  std::vector<CandidatePair> result;
  for (const Worker* w : workers) {
    for (const SpatialTask* s : tasks) {
      const double d = distance_km(w->location, s->location, metric);
      if (d > w->reach_radius_km) continue;
      const double travel = travel_time_seconds(d, w->speed_kmh);
      if (static_cast<double>(snapshot.instant) + travel > static_cast<double>(s->deadline())) {
        continue;
      }
      result.push_back({w->id, s->id, d, travel});
    }
  }
  return result;
}

}  // namespace crowdflow
