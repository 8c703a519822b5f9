#include "crowdflow/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "crowdflow/errors.hpp"
#include "crowdflow/rng.hpp"

namespace crowdflow {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

double average_influence(const AssignmentPlan& plan, const PairScores& scores) {
  if (plan.pairs.empty()) return 0.0;
  double total = 0.0;
  for (const PlanEntry& entry : plan.pairs) {
    const auto it = scores.find({entry.worker_id, entry.task_id});
    if (it == scores.end()) {
      throw std::invalid_argument("no influence score for assigned pair (" + entry.worker_id +
                                  ", " + entry.task_id + ")");
    }
    total += it->second;
  }
  return total / static_cast<double>(plan.pairs.size());
}

double average_propagation(const AssignmentPlan& plan, const PropagationMap& tables) {
  if (plan.pairs.empty()) return 0.0;
  double total = 0.0;
  for (const PlanEntry& entry : plan.pairs) {
    const auto it = tables.find(entry.worker_id);
    if (it == tables.end()) {
      throw std::invalid_argument("no propagation table for assigned worker " + entry.worker_id);
    }
    const PropagationTable& table = it->second;
    for (std::size_t i = 0; i < table.clamped.size(); ++i) {
      if (static_cast<int>(i) == table.source) continue;
      total += table.clamped[i];
    }
  }
  return total / static_cast<double>(plan.pairs.size());
}

double mean_travel_km(const AssignmentPlan& plan) {
  if (plan.pairs.empty()) return 0.0;
  double total = 0.0;
  for (const PlanEntry& entry : plan.pairs) total += entry.distance_km;
  return total / static_cast<double>(plan.pairs.size());
}

Models fit_models(const std::vector<CheckinRecord>& checkins, const SocialGraph& graph,
                  const ExperimentConfig& config) {
  Models models;
  models.graph = graph;
  models.histories = build_histories(checkins);

  // Worker universe: graph nodes plus every check-in user.
  models.universe = graph.worker_ids();
  for (const auto& [id, history] : models.histories) models.universe.push_back(id);
  std::sort(models.universe.begin(), models.universe.end());
  models.universe.erase(std::unique(models.universe.begin(), models.universe.end()),
                        models.universe.end());

  // Topic model over the workers' historical category documents.
  models.topics.num_topics = config.lda.num_topics;
  if (config.use_affinity) {
    if (!config.affinity_model_path.empty() && fs::exists(config.affinity_model_path)) {
      models.topics = load_topic_model(config.affinity_model_path);
    } else {
      const DocumentSet documents = build_documents(models.histories, {});
      if (!documents.worker_docs.empty()) {
        TrainOptions options = config.lda;
        options.seed = derive_seed(config.seed, 0x6c6461);
        models.topics = train_topic_model(documents.worker_docs, options);
      }
    }
  }

  if (config.use_willingness) {
    std::map<std::string, std::uint64_t> hashes;
    for (const auto& [id, history] : models.histories) {
      hashes.emplace(id, history_content_hash(history));
    }
    if (!config.mobility_cache_path.empty() && fs::exists(config.mobility_cache_path)) {
      models.mobility = load_mobility_models(config.mobility_cache_path, hashes);
    }
    MobilityOptions options = config.mobility;
    options.metric = config.metric;
    for (const auto& [id, history] : models.histories) {
      if (history.empty() || models.mobility.count(id) != 0) continue;
      models.mobility.emplace(id, fit_mobility(id, history, options));
    }
    if (!config.mobility_cache_path.empty()) {
      save_mobility_models(models.mobility, hashes, config.mobility_cache_path);
    }
  }

  if (config.use_propagation && graph.num_workers() > 0) {
    const std::uint64_t seed = derive_seed(config.seed, 0x70726f70);
    // The cache applies to the shared-collection mode only.
    if (!config.propagation_isolated && !config.propagation_cache_path.empty() &&
        fs::exists(config.propagation_cache_path)) {
      models.propagation = load_propagation_tables(config.propagation_cache_path,
                                                   graph.content_hash(), config.propagation, seed);
    }
    if (models.propagation.empty()) {
      if (config.propagation_isolated) {
        for (int w = 0; w < graph.num_workers(); ++w) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(w)));
          models.propagation.emplace(graph.id_of(w),
                                     propagation_for(graph, w, config.propagation, rng));
        }
      } else {
        Rng rng(seed);
        const RrrCollection collection = build_collection(graph, config.propagation, rng);
        for (int w = 0; w < graph.num_workers(); ++w) {
          models.propagation.emplace(graph.id_of(w),
                                     propagation_table(collection, w, graph, config.propagation));
        }
      }
      if (!config.propagation_isolated && !config.propagation_cache_path.empty()) {
        save_propagation_tables(models.propagation, graph.content_hash(), config.propagation, seed,
                                config.propagation_cache_path);
      }
    }
  }
  return models;
}

namespace {

// Maps every universe worker to its position; tables and willingness
// vectors are aligned to this order.
struct UniverseIndex {
  std::unordered_map<std::string, int> index;

  explicit UniverseIndex(const std::vector<std::string>& ids) {
    index.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<int>(i));
  }
};

}  // namespace

InfluenceInputs compute_influence(const Snapshot& snapshot, const Models& models,
                                  const ExperimentConfig& config) {
  InfluenceInputs inputs;
  const std::vector<CandidatePair> pairs = eligible_pairs(snapshot, config.metric);
  if (pairs.empty()) return inputs;

  const UniverseIndex universe(models.universe);
  const int universe_size = static_cast<int>(models.universe.size());

  std::map<std::string, const SpatialTask*> tasks;
  for (const SpatialTask& task : snapshot.tasks) tasks.emplace(task.id, &task);

  // Willingness of every universe worker toward each task that appears in
  // an eligible pair; a worker without a movement model contributes
  // nothing to the sums. Entropy is computed alongside for EIA.
  std::map<std::string, std::vector<double>> willingness_by_task;
  for (const CandidatePair& pair : pairs) {
    if (willingness_by_task.count(pair.task_id) != 0) continue;
    const SpatialTask* task = tasks.at(pair.task_id);
    std::vector<double> w(static_cast<std::size_t>(universe_size),
                          config.use_willingness ? 0.0 : 1.0);
    if (config.use_willingness) {
      for (const auto& [worker_id, model] : models.mobility) {
        const auto it = universe.index.find(worker_id);
        if (it == universe.index.end()) continue;
        w[static_cast<std::size_t>(it->second)] = willingness(model, task->location, config.metric);
      }
    }
    willingness_by_task.emplace(pair.task_id, std::move(w));

    const LocationEntropy entropy = location_entropy(models.histories, task->id, task->location,
                                                     config.entropy_radius_km, config.metric);
    inputs.entropies.emplace(task->id, entropy.entropy);
  }

  // Per-worker caches: clamped propagation aligned to the universe and
  // affinity per pair.
  const bool graph_is_universe = models.graph.worker_ids() == models.universe;
  const std::vector<double> ones(static_cast<std::size_t>(universe_size), 1.0);
  std::map<std::string, std::vector<double>> prop_cache;
  const auto aligned_propagation = [&](const std::string& worker_id) -> const std::vector<double>& {
    const auto cached = prop_cache.find(worker_id);
    if (cached != prop_cache.end()) return cached->second;
    std::vector<double> v(static_cast<std::size_t>(universe_size), 0.0);
    const auto table = models.propagation.find(worker_id);
    if (table != models.propagation.end()) {
      if (graph_is_universe) {
        v = table->second.clamped;
      } else {
        for (int g = 0; g < models.graph.num_workers(); ++g) {
          const auto it = universe.index.find(models.graph.id_of(g));
          if (it != universe.index.end()) {
            v[static_cast<std::size_t>(it->second)] =
                table->second.clamped[static_cast<std::size_t>(g)];
          }
        }
      }
    }
    // else: worker absent from the social graph, no propagation beyond
    // itself.
    return prop_cache.emplace(worker_id, std::move(v)).first->second;
  };

  std::map<std::string, double> affinity_cache;
  const bool trained = !models.topics.topic_term.empty();

  for (const CandidatePair& pair : pairs) {
    double p_aff = 1.0;
    if (config.use_affinity) {
      const std::string key = pair.worker_id + "\t" + pair.task_id;
      const auto cached = affinity_cache.find(key);
      if (cached != affinity_cache.end()) {
        p_aff = cached->second;
      } else {
        const SpatialTask* task = tasks.at(pair.task_id);
        CategoryDocument task_doc;
        task_doc.owner = task->id;
        task_doc.tokens.assign(task->categories.begin(), task->categories.end());
        const auto hist = models.histories.find(pair.worker_id);
        CategoryDocument worker_doc = worker_document(
            pair.worker_id, hist == models.histories.end() ? History{} : hist->second);

        if (!trained) {
          p_aff = 1.0 / std::max(1, models.topics.num_topics);
        } else if (worker_doc.tokens.empty()) {
          // No history: neutral prior, the uniform topic distribution.
          const auto inferred = infer_topics(models.topics, task_doc);
          double dot = 0.0;
          for (double x : inferred.distribution) dot += x / models.topics.num_topics;
          p_aff = dot;
        } else {
          p_aff = affinity(models.topics, worker_doc, task_doc);
        }
        affinity_cache.emplace(key, p_aff);
      }
    }

    const std::vector<double>& will = willingness_by_task.at(pair.task_id);
    const std::vector<double>& prop =
        config.use_propagation ? aligned_propagation(pair.worker_id) : ones;
    const int self_index = universe.index.at(pair.worker_id);
    const double value = worker_task_influence(p_aff, will, prop, self_index);
    inputs.scores.emplace(std::make_pair(pair.worker_id, pair.task_id), value);
  }
  return inputs;
}

namespace {

std::vector<const Worker*> sorted_workers(const Snapshot& snapshot) {
  std::vector<const Worker*> out;
  for (const Worker& w : snapshot.workers) out.push_back(&w);
  std::sort(out.begin(), out.end(), [](const Worker* a, const Worker* b) { return a->id < b->id; });
  return out;
}

std::vector<const SpatialTask*> sorted_tasks(const Snapshot& snapshot) {
  std::vector<const SpatialTask*> out;
  for (const SpatialTask& s : snapshot.tasks) out.push_back(&s);
  std::sort(out.begin(), out.end(),
            [](const SpatialTask* a, const SpatialTask* b) { return a->id < b->id; });
  return out;
}

// Seeded partial Fisher-Yates over a sorted pool.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t count, Rng& rng) {
  if (count >= pool.size()) return pool;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
  if (config.days.empty()) throw ConfigError("no days configured");
  if (config.strategies.empty()) throw ConfigError("no strategies configured");

  const CheckinFile checkins = load_checkins(config.checkins_path);
  std::vector<std::string> declared;
  for (const CheckinRecord& rec : checkins.records) declared.push_back(rec.user_id);
  const SocialGraphFile graph_file =
      load_social_graph(config.edges_path, config.directedness, declared);

  const Models models = fit_models(checkins.records, graph_file.graph, config);

  fs::create_directories(config.output_dir);

  // Effective run settings, including the component switches; written so a
  // metrics file can always be traced back to its configuration.
  {
    std::ofstream meta(fs::path(config.output_dir) / "run_config.txt");
    meta << "seed=" << config.seed << '\n'
         << "metric=" << to_string(config.metric) << '\n'
         << "use_affinity=" << (config.use_affinity ? 1 : 0) << '\n'
         << "use_willingness=" << (config.use_willingness ? 1 : 0) << '\n'
         << "use_propagation=" << (config.use_propagation ? 1 : 0) << '\n'
         << "granularity=" << config.granularity << '\n'
         << "speed_kmh=" << format_double(config.speed_kmh) << '\n'
         << "prop_eps=" << format_double(config.propagation.eps) << '\n'
         << "prop_confidence=" << format_double(config.propagation.confidence_exponent) << '\n'
         << "prop_fraction_mode=" << (config.propagation.fraction_mode ? 1 : 0) << '\n'
         << "topics=" << config.lda.num_topics << '\n';
  }

  MetricsReport report;
  const bool single_grid_point = config.num_tasks.size() == 1 && config.num_workers.size() == 1 &&
                                 config.valid_durations.size() == 1 &&
                                 config.reach_radii.size() == 1;

  for (int S : config.num_tasks) {
    for (int W : config.num_workers) {
      for (Duration phi : config.valid_durations) {
        for (double r : config.reach_radii) {
          std::string label = "S" + std::to_string(S) + "_W" + std::to_string(W) + "_phi" +
                              std::to_string(phi) + "_r" + format_double(r);
          const fs::path grid_dir =
              single_grid_point ? fs::path(config.output_dir) : fs::path(config.output_dir) / label;
          fs::create_directories(grid_dir);
          fs::create_directories(grid_dir / "plans");

          MetricsReport grid_report;
          for (const std::string& strategy_name : config.strategies) {
            const Strategy strategy = strategy_from_string(strategy_name);
            std::set<std::string> assigned_workers;

            for (std::size_t day_index = 0; day_index < config.days.size(); ++day_index) {
              const std::string& day = config.days[day_index];
              const Timestamp day_start = parse_date(day);
              const WorkerDefaults defaults{r, config.speed_kmh};
              DaySnapshots built = build_snapshots(checkins.records, day_start,
                                                   config.granularity, phi, defaults);

              for (std::size_t window = 0; window < built.snapshots.size(); ++window) {
                Snapshot snapshot = std::move(built.snapshots[window]);

                // Workers stay online until they are assigned a task.
                std::erase_if(snapshot.workers, [&](const Worker& w) {
                  return assigned_workers.count(w.id) != 0;
                });

                // Sample the configured instance size; seeds depend on the
                // day and window but not on the strategy, and the two
                // streams are independent so the task sample is unaffected
                // by worker removal.
                Rng worker_rng(derive_seed(config.seed, fnv1a(day + "#workers") ^ window));
                Rng task_rng(derive_seed(config.seed, fnv1a(day + "#tasks") ^ window));
                auto workers = sorted_workers(snapshot);
                auto tasks = sorted_tasks(snapshot);
                auto picked_workers =
                    sample_without_replacement(workers, static_cast<std::size_t>(W), worker_rng);
                auto picked_tasks =
                    sample_without_replacement(tasks, static_cast<std::size_t>(S), task_rng);

                Snapshot instance;
                instance.instant = snapshot.instant;
                for (const Worker* w : picked_workers) instance.workers.push_back(*w);
                for (const SpatialTask* s : picked_tasks) instance.tasks.push_back(*s);

                const auto instance_tag = [&](const std::string& stage) {
                  return stage + " failed for instance " + day + "/" + strategy_name + "#" +
                         std::to_string(window) + ": ";
                };
                InfluenceInputs influence;
                try {
                  influence = compute_influence(instance, models, config);
                } catch (const std::exception& e) {
                  throw std::runtime_error(instance_tag("influence computation") + e.what());
                }

                const auto start = std::chrono::steady_clock::now();
                AssignmentPlan plan;
                try {
                  plan = assign_with_strategy(strategy, instance, influence.scores,
                                              influence.entropies, config.metric);
                } catch (const std::exception& e) {
                  throw std::runtime_error(instance_tag("assignment") + e.what());
                }
                const auto stop = std::chrono::steady_clock::now();

                for (const PlanEntry& entry : plan.pairs) assigned_workers.insert(entry.worker_id);

                MetricsRow row;
                row.day = day;
                row.strategy = strategy_name;
                row.assigned = plan.size();
                row.empty_plan = plan.pairs.empty();
                row.ai = average_influence(plan, influence.scores);
                row.ap = plan.pairs.empty() ? 0.0 : average_propagation(plan, models.propagation);
                row.mean_travel_km = mean_travel_km(plan);
                row.solve_seconds =
                    config.timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
                row.seed = config.seed;
                grid_report.rows.push_back(row);

                std::ofstream plan_out(grid_dir / "plans" /
                                       (day + "_" + strategy_name + "_" + std::to_string(window) +
                                        ".csv"));
                plan_out << plan_csv(plan, instance.instant, strategy_name);
              }
            }
          }

          std::ofstream metrics_out(grid_dir / "metrics.csv");
          metrics_out << metrics_csv(grid_report);
          report.rows.insert(report.rows.end(), grid_report.rows.begin(), grid_report.rows.end());
        }
      }
    }
  }
  return report;
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "day,strategy,assigned,ai,ap,mean_travel_km,solve_seconds,seed\n";
  for (const MetricsRow& row : report.rows) {
    out << row.day << ',' << row.strategy << ',' << row.assigned << ',' << format_double(row.ai)
        << ',' << format_double(row.ap) << ',' << format_double(row.mean_travel_km) << ','
        << format_double(row.solve_seconds) << ',' << row.seed << '\n';
  }
  return out.str();
}

std::string plan_csv(const AssignmentPlan& plan, Timestamp instant, const std::string& strategy) {
  std::ostringstream out;
  out << "instant,task_id,worker_id,strategy,cost,influence,distance_km\n";
  for (const PlanEntry& entry : plan.pairs) {
    out << instant << ',' << entry.task_id << ',' << entry.worker_id << ',' << strategy << ','
        << format_double(entry.cost) << ',' << format_double(entry.influence) << ','
        << format_double(entry.distance_km) << '\n';
  }
  return out.str();
}

std::vector<ReportRow> aggregate_metrics(const std::vector<std::string>& metrics_files) {
  struct Accumulator {
    std::size_t instances = 0;
    double assigned = 0.0;
    double ai = 0.0;
    double ap = 0.0;
    double travel = 0.0;
    double solve = 0.0;
  };
  std::map<std::string, Accumulator> by_strategy;

  for (const std::string& file : metrics_files) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open metrics file: " + file);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty metrics file: " + file);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() != 8) throw DataError("malformed metrics row in " + file + ": " + line);
      Accumulator& acc = by_strategy[fields[1]];
      ++acc.instances;
      acc.assigned += std::stod(fields[2]);
      acc.ai += std::stod(fields[3]);
      acc.ap += std::stod(fields[4]);
      acc.travel += std::stod(fields[5]);
      acc.solve += std::stod(fields[6]);
    }
  }

  std::vector<ReportRow> rows;
  for (const auto& [strategy, acc] : by_strategy) {
    ReportRow row;
    row.strategy = strategy;
    row.instances = acc.instances;
    const double n = static_cast<double>(acc.instances);
    row.mean_assigned = acc.assigned / n;
    row.mean_ai = acc.ai / n;
    row.mean_ap = acc.ap / n;
    row.mean_travel_km = acc.travel / n;
    row.mean_solve_seconds = acc.solve / n;
    rows.push_back(row);
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "strategy,instances,mean_assigned,mean_ai,mean_ap,mean_travel_km,mean_solve_seconds\n";
  for (const ReportRow& row : rows) {
    out << row.strategy << ',' << row.instances << ',' << format_double(row.mean_assigned) << ','
        << format_double(row.mean_ai) << ',' << format_double(row.mean_ap) << ','
        << format_double(row.mean_travel_km) << ',' << format_double(row.mean_solve_seconds)
        << '\n';
  }
  return out.str();
}

}  // namespace crowdflow
