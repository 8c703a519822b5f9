#include "crowdflow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "crowdflow/errors.hpp"
#include "crowdflow/rng.hpp"

namespace crowdflow {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !s.empty();
}

bool parse_f64(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool parse_checkin_line(const std::string& line, CheckinRecord& rec) {
  const auto fields = split(line, '\t');
  if (fields.size() != 6) return false;
  if (fields[0].empty() || fields[4].empty()) return false;
  rec.user_id = fields[0];
  if (!parse_i64(fields[1], rec.timestamp)) return false;
  if (!parse_f64(fields[2], rec.location.lat)) return false;
  if (!parse_f64(fields[3], rec.location.lon)) return false;
  if (!(rec.location.lat >= -90.0 && rec.location.lat <= 90.0)) return false;
  if (!(rec.location.lon >= -180.0 && rec.location.lon <= 180.0)) return false;
  rec.venue_id = fields[4];
  rec.categories.clear();
  std::set<std::string> cats;
  for (const std::string& c : split(fields[5], '|')) {
    if (!c.empty()) cats.insert(c);
  }
  rec.categories.assign(cats.begin(), cats.end());
  return true;
}

}  // namespace

CheckinFile load_checkins(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open check-in file: " + path);

  CheckinFile out;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;

    CheckinRecord rec;
    if (parse_checkin_line(line, rec)) {
      if (rec.categories.empty()) ++out.empty_category_records;
      out.records.push_back(std::move(rec));
    } else if (first_content_line) {
      // A leading non-record line is a header when its second field is not
      // numeric.
      const auto fields = split(line, '\t');
      std::int64_t dummy = 0;
      if (fields.size() >= 2 && !parse_i64(fields[1], dummy)) {
        out.had_header = true;
      } else if (strict) {
        throw DataError("malformed check-in line " + std::to_string(line_no) + " in " + path);
      } else {
        ++out.malformed_lines;
      }
    } else if (strict) {
      throw DataError("malformed check-in line " + std::to_string(line_no) + " in " + path);
    } else {
      ++out.malformed_lines;
    }
    first_content_line = false;
  }
  return out;
}

HistoryMap build_histories(const std::vector<CheckinRecord>& records) {
  HistoryMap histories;
  for (const CheckinRecord& rec : records) {
    histories[rec.user_id].push_back(
        {rec.venue_id, rec.location, rec.timestamp, rec.timestamp, rec.categories});
  }
  for (auto& [id, history] : histories) {
    std::stable_sort(history.begin(), history.end(),
                     [](const HistoryRecord& a, const HistoryRecord& b) {
                       return a.arrival_time < b.arrival_time;
                     });
  }
  return histories;
}

std::uint64_t history_content_hash(const History& history) {
  std::uint64_t h = fnv1a(std::int64_t(history.size()));
  for (const HistoryRecord& rec : history) {
    h = fnv1a(rec.venue_id, h);
    h = fnv1a(rec.location.lat, h);
    h = fnv1a(rec.location.lon, h);
    h = fnv1a(rec.arrival_time, h);
    h = fnv1a(rec.completion_time, h);
    for (const std::string& c : rec.categories) h = fnv1a(c, h);
  }
  return h;
}

SocialGraph SocialGraph::build(std::vector<std::string> nodes,
                               const std::vector<std::pair<std::string, std::string>>& edges) {
  for (const auto& [a, b] : edges) {
    nodes.push_back(a);
    nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  SocialGraph g;
  g.ids_ = std::move(nodes);
  g.index_.reserve(g.ids_.size());
  for (std::size_t i = 0; i < g.ids_.size(); ++i) {
    g.index_.emplace(g.ids_[i], static_cast<int>(i));
  }
  const std::size_t n = g.ids_.size();
  std::vector<std::vector<int>> in_from(n);
  for (const auto& [a, b] : edges) {
    const int u = g.index_.at(a);
    const int v = g.index_.at(b);
    in_from[static_cast<std::size_t>(v)].push_back(u);
  }
  g.out_.assign(n, {});
  g.in_.assign(n, {});
  for (std::size_t v = 0; v < n; ++v) {
    auto& sources = in_from[v];
    std::sort(sources.begin(), sources.end());
    const double p = sources.empty() ? 0.0 : 1.0 / static_cast<double>(sources.size());
    for (int u : sources) {
      g.out_[static_cast<std::size_t>(u)].push_back({static_cast<int>(v), p});
      g.in_[v].push_back({u, p});
      ++g.edge_count_;
    }
  }
  for (auto& adj : g.out_) {
    std::sort(adj.begin(), adj.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  }
  return g;
}

std::optional<int> SocialGraph::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t SocialGraph::content_hash() const {
  std::uint64_t h = fnv1a(std::int64_t(ids_.size()));
  for (const std::string& id : ids_) h = fnv1a(id, h);
  for (std::size_t u = 0; u < out_.size(); ++u) {
    for (const Edge& e : out_[u]) {
      h = fnv1a(std::int64_t(u), h);
      h = fnv1a(std::int64_t(e.to), h);
      h = fnv1a(e.probability, h);
    }
  }
  return h;
}

SocialGraphFile load_social_graph(const std::string& path, Directedness directedness,
                                  const std::vector<std::string>& declared_nodes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file: " + path);

  SocialGraphFile out;
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() == 1) fields = split(line, ' ');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError("malformed edge line " + std::to_string(line_no) + " in " + path);
    }
    if (fields[0] == fields[1]) {
      ++out.self_loops_skipped;
      continue;
    }
    const auto add = [&](const std::string& a, const std::string& b) {
      if (seen.emplace(a, b).second) {
        edges.emplace_back(a, b);
      } else {
        ++out.duplicate_edges;
      }
    };
    add(fields[0], fields[1]);
    if (directedness == Directedness::UndirectedAsBidirectional) add(fields[1], fields[0]);
  }
  out.graph = SocialGraph::build(declared_nodes, edges);
  return out;
}

namespace {

struct VenueDay {
  GeoPoint location;          // location of the earliest check-in of the window
  Timestamp earliest = 0;     // publication time
  std::set<std::string> categories;
};

}  // namespace

DaySnapshots build_snapshots(const std::vector<CheckinRecord>& records, Timestamp day_start,
                             Duration granularity, Duration task_valid_duration,
                             const WorkerDefaults& defaults) {
  if (granularity <= 0) throw ConfigError("granularity must be positive");
  if (task_valid_duration <= 0) throw ConfigError("task valid duration must be positive");

  // Venue categories are a venue property: the union over the whole input.
  std::map<std::string, std::set<std::string>> venue_categories;
  for (const CheckinRecord& rec : records) {
    venue_categories[rec.venue_id].insert(rec.categories.begin(), rec.categories.end());
  }

  DaySnapshots out;
  const Timestamp day_end = day_start + 86400;
  for (Timestamp window_start = day_start; window_start < day_end; window_start += granularity) {
    const Timestamp window_end = std::min(day_end, window_start + granularity);

    std::map<std::string, VenueDay> venues;
    std::set<std::string> active_users;
    for (const CheckinRecord& rec : records) {
      if (rec.timestamp < window_start || rec.timestamp >= window_end) continue;
      active_users.insert(rec.user_id);
      auto [it, inserted] = venues.try_emplace(rec.venue_id);
      VenueDay& v = it->second;
      if (inserted || rec.timestamp < v.earliest) {
        v.earliest = rec.timestamp;
        v.location = rec.location;
      }
    }
    if (venues.empty()) continue;

    // The assignment instant is the moment the window's last new task
    // appears; by then every task exists and the freshest worker
    // positions are known.
    Timestamp instant = 0;
    for (const auto& [venue, v] : venues) instant = std::max(instant, v.earliest);

    Snapshot snap;
    snap.instant = instant;
    for (const auto& [venue, v] : venues) {
      const auto& cats = venue_categories[venue];
      if (cats.empty()) {
        ++out.venues_without_categories;
        continue;
      }
      if (v.earliest + task_valid_duration <= instant) {
        ++out.tasks_dropped_expired;
        continue;
      }
      SpatialTask task;
      task.id = venue;
      task.location = v.location;
      task.publication_time = v.earliest;
      task.valid_duration = task_valid_duration;
      task.categories = cats;
      snap.tasks.push_back(std::move(task));
    }
    if (snap.tasks.empty()) continue;

    for (const std::string& user : active_users) {
      // Most recent check-in at or before the instant; a user whose first
      // check-in of the window falls after the instant is placed at that
      // first in-window check-in.
      const CheckinRecord* best = nullptr;
      const CheckinRecord* first_in_window = nullptr;
      for (const CheckinRecord& rec : records) {
        if (rec.user_id != user) continue;
        if (rec.timestamp <= instant && (!best || rec.timestamp >= best->timestamp)) {
          best = &rec;
        }
        if (rec.timestamp >= window_start && rec.timestamp < window_end &&
            (!first_in_window || rec.timestamp < first_in_window->timestamp)) {
          first_in_window = &rec;
        }
      }
      const CheckinRecord* chosen = best ? best : first_in_window;
      Worker w;
      w.id = user;
      w.location = chosen->location;
      w.reach_radius_km = defaults.reach_radius_km;
      w.speed_kmh = defaults.speed_kmh;
      snap.workers.push_back(std::move(w));
    }

    validate_snapshot(snap);
    out.snapshots.push_back(std::move(snap));
  }
  return out;
}

Timestamp parse_date(const std::string& date) {
  std::int64_t yy = 0, mm = 0, dd = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-' ||
      !parse_i64(date.substr(0, 4), yy) || !parse_i64(date.substr(5, 2), mm) ||
      !parse_i64(date.substr(8, 2), dd)) {
    throw ConfigError("expected YYYY-MM-DD date, got: " + date);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(yy)},
                                        std::chrono::month{static_cast<unsigned>(mm)},
                                        std::chrono::day{static_cast<unsigned>(dd)}};
  if (!ymd.ok()) throw ConfigError("invalid calendar date: " + date);
  const auto days = std::chrono::sys_days{ymd};
  return std::chrono::duration_cast<std::chrono::seconds>(days.time_since_epoch()).count();
}

}  // namespace crowdflow
