#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdflow/core.hpp"
#include "crowdflow/geo.hpp"

namespace crowdflow {

// One line of a check-in file.
struct CheckinRecord {
  std::string user_id;
  Timestamp timestamp = 0;
  GeoPoint location;
  std::string venue_id;
  std::vector<std::string> categories;  // sorted, deduplicated; may be empty
};

struct CheckinFile {
  std::vector<CheckinRecord> records;  // in file order
  std::size_t malformed_lines = 0;
  std::size_t empty_category_records = 0;
  bool had_header = false;
};

// Tab-separated: user_id, unix_seconds, lat, lon, venue_id, cat1|cat2|...
// An optional header line is detected by a non-numeric second field. In
// strict mode the first malformed line raises DataError with its number;
// otherwise malformed lines are counted and skipped.
CheckinFile load_checkins(const std::string& path, bool strict = false);

// One performed task in a worker's history.
struct HistoryRecord {
  std::string venue_id;
  GeoPoint location;
  Timestamp arrival_time = 0;
  Timestamp completion_time = 0;  // >= arrival_time
  std::vector<std::string> categories;
};

using History = std::vector<HistoryRecord>;                // sorted by arrival
using HistoryMap = std::map<std::string, History>;         // worker id -> history

// Check-ins become instantaneous task-performing records
// (completion == arrival).
HistoryMap build_histories(const std::vector<CheckinRecord>& records);

std::uint64_t history_content_hash(const History& history);

// Directed worker graph with per-edge informed probabilities 1/in-degree.
class SocialGraph {
 public:
  struct Edge {
    int to = 0;
    double probability = 0.0;
  };

  // Node universe = `nodes` plus every endpoint in `edges`; edges given as
  // directed (from, to) id pairs. Self-loops and duplicates must already be
  // removed by the loader.
  static SocialGraph build(std::vector<std::string> nodes,
                           const std::vector<std::pair<std::string, std::string>>& edges);

  int num_workers() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& worker_ids() const { return ids_; }
  const std::string& id_of(int index) const { return ids_[static_cast<std::size_t>(index)]; }
  std::optional<int> index_of(const std::string& id) const;

  const std::vector<Edge>& out_edges(int index) const {
    return out_[static_cast<std::size_t>(index)];
  }
  const std::vector<Edge>& in_edges(int index) const {
    return in_[static_cast<std::size_t>(index)];
  }
  int in_degree(int index) const {
    return static_cast<int>(in_[static_cast<std::size_t>(index)].size());
  }
  std::size_t num_edges() const { return edge_count_; }

  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> ids_;  // sorted
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
  std::size_t edge_count_ = 0;
};

enum class Directedness { UndirectedAsBidirectional, Directed };

struct SocialGraphFile {
  SocialGraph graph;
  std::size_t self_loops_skipped = 0;
  std::size_t duplicate_edges = 0;
};

// Edge list, one `user_a \t user_b` pair per line. Undirected input yields
// both directions. `declared_nodes` extends the node universe (isolated
// workers are permitted).
SocialGraphFile load_social_graph(const std::string& path,
                                  Directedness directedness = Directedness::UndirectedAsBidirectional,
                                  const std::vector<std::string>& declared_nodes = {});

struct WorkerDefaults {
  double reach_radius_km = 25.0;
  double speed_kmh = 5.0;
};

struct DaySnapshots {
  std::vector<Snapshot> snapshots;
  std::size_t tasks_dropped_expired = 0;
  std::size_t venues_without_categories = 0;
};

// Simulation protocol for one day: every venue checked in during a window
// becomes a task located at the venue with publication time equal to the
// earliest check-in of the window; users who check in during the window are
// the available workers, placed at their most recent check-in at or before
// the snapshot instant. The instant is the latest publication time in the
// window; tasks already expired at that instant are dropped (counted).
DaySnapshots build_snapshots(const std::vector<CheckinRecord>& records,
                             Timestamp day_start, Duration granularity,
                             Duration task_valid_duration,
                             const WorkerDefaults& defaults);

// "YYYY-MM-DD" -> UTC midnight. Throws ConfigError on malformed input.
Timestamp parse_date(const std::string& date);

}  // namespace crowdflow
