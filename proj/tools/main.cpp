#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdflow/errors.hpp"
#include "crowdflow/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crowdflow;

namespace {

struct CliOptions {
  ExperimentConfig config;
  std::string metric_name = "haversine";
  bool directed = false;
  bool strict = false;
  bool no_timing = false;
  bool no_affinity = false;
  bool no_willingness = false;
  bool no_propagation = false;
  std::string day;
  std::string strategy;
  std::string out_file;
  std::vector<std::string> report_inputs;
};

void add_data_options(CLI::App* cmd, CliOptions& opt) {
  cmd->set_config("--config", "", "Flat key=value configuration file; command line wins");
  cmd->add_option("--checkins", opt.config.checkins_path, "Check-in TSV file");
  cmd->add_option("--edges", opt.config.edges_path, "Social edge list file");
  cmd->add_flag("--directed", opt.directed, "Treat edge lines as already directed");
  cmd->add_flag("--strict", opt.strict, "Abort on the first malformed input line");
  cmd->add_option("--metric", opt.metric_name, "Distance metric: haversine or planar-euclidean");
  cmd->add_option("--speed", opt.config.speed_kmh, "Worker speed in km/h");
  cmd->add_option("--seed", opt.config.seed, "Random seed recorded in all outputs");
  cmd->add_option("--out", opt.config.output_dir, "Output directory");
}

void add_model_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--topics", opt.config.lda.num_topics, "Number of topics");
  cmd->add_option("--alpha", opt.config.lda.alpha, "Document-topic prior (<=0 selects 50/topics)");
  cmd->add_option("--beta", opt.config.lda.beta, "Topic-term prior");
  cmd->add_option("--lda-iterations", opt.config.lda.iterations, "Training sweeps");
  cmd->add_option("--lda-infer-iterations", opt.config.lda.infer_iterations, "Inference sweeps");
  cmd->add_option("--restart", opt.config.mobility.restart, "Walk restart probability");
  cmd->add_option("--rwr-tol", opt.config.mobility.tolerance, "Stationary iteration tolerance");
  cmd->add_option("--same-location-km", opt.config.mobility.same_location_km,
                  "Colocation threshold for distinct locations");
  cmd->add_option("--shape-fallback", opt.config.mobility.shape_fallback,
                  "Decay shape for degenerate histories");
  cmd->add_option("--prop-eps", opt.config.propagation.eps, "Propagation accuracy parameter");
  cmd->add_option("--prop-confidence", opt.config.propagation.confidence_exponent,
                  "Propagation confidence exponent");
  cmd->add_flag("--prop-fraction-mode", opt.config.propagation.fraction_mode,
                "Per-root fraction estimator instead of the scaled-count one");
  cmd->add_flag("--prop-isolated", opt.config.propagation_isolated,
                "Resample a fresh collection per source worker (bound audits)");
  cmd->add_option("--entropy-radius", opt.config.entropy_radius_km,
                  "Colocation radius (km) for location entropy");
  cmd->add_option("--affinity-model", opt.config.affinity_model_path,
                  "Load/store the trained topic model here");
  cmd->add_option("--mobility-cache", opt.config.mobility_cache_path,
                  "Mobility model cache file");
  cmd->add_option("--propagation-cache", opt.config.propagation_cache_path,
                  "Propagation table cache file");
}

void add_instance_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--days", opt.config.days, "Days to simulate (YYYY-MM-DD)")->delimiter(',');
  cmd->add_option("--granularity", opt.config.granularity, "Instance window in seconds");
  cmd->add_option("--tasks", opt.config.num_tasks, "Tasks sampled per instance")->delimiter(',');
  cmd->add_option("--workers", opt.config.num_workers, "Workers sampled per instance")
      ->delimiter(',');
  cmd->add_option("--valid-duration", opt.config.valid_durations, "Task valid time in seconds")
      ->delimiter(',');
  cmd->add_option("--reach-radius", opt.config.reach_radii, "Worker reach radius in km")
      ->delimiter(',');
  cmd->add_flag("--no-affinity", opt.no_affinity, "Replace affinity by 1");
  cmd->add_flag("--no-willingness", opt.no_willingness, "Replace willingness by 1");
  cmd->add_flag("--no-propagation", opt.no_propagation, "Replace propagation by 1");
  cmd->add_flag("--no-timing", opt.no_timing, "Write zero solve times (byte-stable output)");
}

void finalize(CliOptions& opt) {
  try {
    opt.config.metric = metric_from_string(opt.metric_name);
    opt.config.propagation.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  opt.config.mobility.metric = opt.config.metric;
  opt.config.directedness =
      opt.directed ? Directedness::Directed : Directedness::UndirectedAsBidirectional;
  if (opt.no_timing) opt.config.timing = false;
  if (opt.no_affinity) opt.config.use_affinity = false;
  if (opt.no_willingness) opt.config.use_willingness = false;
  if (opt.no_propagation) opt.config.use_propagation = false;
}

json snapshot_to_json(const Snapshot& snap) {
  json workers = json::array();
  for (const Worker& w : snap.workers) {
    workers.push_back({{"id", w.id},
                       {"lat", w.location.lat},
                       {"lon", w.location.lon},
                       {"reach_radius_km", w.reach_radius_km},
                       {"speed_kmh", w.speed_kmh}});
  }
  json tasks = json::array();
  for (const SpatialTask& s : snap.tasks) {
    tasks.push_back({{"id", s.id},
                     {"lat", s.location.lat},
                     {"lon", s.location.lon},
                     {"publication_time", s.publication_time},
                     {"valid_duration", s.valid_duration},
                     {"categories", s.categories}});
  }
  return {{"instant", snap.instant}, {"workers", workers}, {"tasks", tasks}};
}

int cmd_ingest(CliOptions& opt) {
  if (opt.config.checkins_path.empty()) throw ConfigError("--checkins is required");
  if (opt.config.days.empty()) throw ConfigError("--days is required");
  const CheckinFile checkins = load_checkins(opt.config.checkins_path, opt.strict);

  json days = json::object();
  std::size_t total_snapshots = 0;
  for (const std::string& day : opt.config.days) {
    const WorkerDefaults defaults{opt.config.reach_radii.front(), opt.config.speed_kmh};
    const DaySnapshots built =
        build_snapshots(checkins.records, parse_date(day), opt.config.granularity,
                        opt.config.valid_durations.front(), defaults);
    json snaps = json::array();
    for (const Snapshot& snap : built.snapshots) snaps.push_back(snapshot_to_json(snap));
    days[day] = {{"snapshots", std::move(snaps)},
                 {"tasks_dropped_expired", built.tasks_dropped_expired},
                 {"venues_without_categories", built.venues_without_categories}};
    total_snapshots += built.snapshots.size();
  }

  json out;
  out["format"] = "crowdflow-snapshots";
  out["version"] = 1;
  out["records"] = checkins.records.size();
  out["malformed_lines"] = checkins.malformed_lines;
  out["empty_category_records"] = checkins.empty_category_records;
  out["days"] = std::move(days);

  if (!opt.config.edges_path.empty()) {
    std::vector<std::string> declared;
    for (const CheckinRecord& rec : checkins.records) declared.push_back(rec.user_id);
    const SocialGraphFile graph =
        load_social_graph(opt.config.edges_path, opt.config.directedness, declared);
    out["graph"] = {{"workers", graph.graph.num_workers()},
                    {"edges", graph.graph.num_edges()},
                    {"self_loops_skipped", graph.self_loops_skipped},
                    {"duplicate_edges", graph.duplicate_edges}};
  }

  fs::create_directories(opt.config.output_dir);
  const fs::path path = fs::path(opt.config.output_dir) / "snapshots.json";
  std::ofstream file(path);
  file << out.dump(2) << '\n';
  std::cout << "validated " << checkins.records.size() << " check-ins ("
            << checkins.malformed_lines << " malformed skipped), wrote " << total_snapshots
            << " snapshots to " << path.string() << '\n';
  return 0;
}

int cmd_train_affinity(CliOptions& opt) {
  if (opt.config.checkins_path.empty()) throw ConfigError("--checkins is required");
  if (opt.out_file.empty()) throw ConfigError("--model-out is required");
  const CheckinFile checkins = load_checkins(opt.config.checkins_path, opt.strict);
  const HistoryMap histories = build_histories(checkins.records);
  const DocumentSet documents = build_documents(histories, {});
  if (documents.worker_docs.empty()) throw DataError("no trainable worker documents");
  TrainOptions options = opt.config.lda;
  options.seed = derive_seed(opt.config.seed, 0x6c6461);
  const TopicModel model = train_topic_model(documents.worker_docs, options);
  save_topic_model(model, opt.out_file);
  std::cout << "trained " << model.num_topics << " topics over " << model.vocabulary.size()
            << " categories from " << documents.worker_docs.size() << " documents ("
            << documents.workers_without_history << " workers without history), wrote "
            << opt.out_file << '\n';
  return 0;
}

int cmd_fit_mobility(CliOptions& opt) {
  if (opt.config.checkins_path.empty()) throw ConfigError("--checkins is required");
  if (opt.out_file.empty()) throw ConfigError("--model-out is required");
  const CheckinFile checkins = load_checkins(opt.config.checkins_path, opt.strict);
  const HistoryMap histories = build_histories(checkins.records);
  MobilityOptions options = opt.config.mobility;
  options.metric = opt.config.metric;
  MobilityMap models;
  std::map<std::string, std::uint64_t> hashes;
  std::size_t degenerate = 0;
  for (const auto& [id, history] : histories) {
    if (history.empty()) continue;
    MobilityModel model = fit_mobility(id, history, options);
    if (model.degenerate_shape) ++degenerate;
    hashes.emplace(id, history_content_hash(history));
    models.emplace(id, std::move(model));
  }
  save_mobility_models(models, hashes, opt.out_file);
  std::cout << "fitted " << models.size() << " mobility models (" << degenerate
            << " with fallback shape), wrote " << opt.out_file << '\n';
  return 0;
}

int cmd_precompute_propagation(CliOptions& opt) {
  if (opt.config.edges_path.empty()) throw ConfigError("--edges is required");
  if (opt.out_file.empty()) throw ConfigError("--model-out is required");
  std::vector<std::string> declared;
  if (!opt.config.checkins_path.empty()) {
    const CheckinFile checkins = load_checkins(opt.config.checkins_path, opt.strict);
    for (const CheckinRecord& rec : checkins.records) declared.push_back(rec.user_id);
  }
  const SocialGraphFile graph_file =
      load_social_graph(opt.config.edges_path, opt.config.directedness, declared);
  const SocialGraph& graph = graph_file.graph;
  if (graph.num_workers() == 0) throw DataError("social graph has no workers");

  const std::uint64_t seed = derive_seed(opt.config.seed, 0x70726f70);
  PropagationMap tables;
  std::size_t sampled = 0;
  std::string sizing = "schedule exhausted";
  std::int64_t final_k = 0;
  if (opt.config.propagation_isolated) {
    for (int w = 0; w < graph.num_workers(); ++w) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(w)));
      tables.emplace(graph.id_of(w), propagation_for(graph, w, opt.config.propagation, rng));
    }
    sizing = "isolated per-worker collections";
  } else {
    Rng rng(seed);
    const RrrCollection collection = build_collection(graph, opt.config.propagation, rng);
    for (int w = 0; w < graph.num_workers(); ++w) {
      tables.emplace(graph.id_of(w),
                     propagation_table(collection, w, graph, opt.config.propagation));
    }
    sampled = collection.size();
    if (collection.threshold_triggered) sizing = "threshold met";
    final_k = collection.final_k;
    save_propagation_tables(tables, graph.content_hash(), opt.config.propagation, seed,
                            opt.out_file);
  }
  if (opt.config.propagation_isolated) {
    save_propagation_tables(tables, graph.content_hash(), opt.config.propagation,
                            derive_seed(seed, 0x69736f), opt.out_file);
    std::cout << "wrote isolated-mode tables for " << tables.size() << " workers to "
              << opt.out_file << '\n';
    return 0;
  }
  std::cout << "sampled " << sampled << " reverse-reachable sets (" << sizing << " at k="
            << final_k << "), wrote tables for " << tables.size() << " workers to " << opt.out_file
            << '\n';
  return 0;
}

int cmd_run(CliOptions& opt, bool single_instance) {
  if (opt.config.checkins_path.empty()) throw ConfigError("--checkins is required");
  if (opt.config.edges_path.empty()) throw ConfigError("--edges is required");
  if (single_instance) {
    if (opt.day.empty()) throw ConfigError("--day is required");
    if (opt.strategy.empty()) throw ConfigError("--strategy is required");
    opt.config.days = {opt.day};
    opt.config.strategies = {opt.strategy};
  }
  if (opt.config.days.empty()) throw ConfigError("--days is required");
  try {
    for (const std::string& name : opt.config.strategies) strategy_from_string(name);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  const MetricsReport report = run_experiment(opt.config);
  std::cout << metrics_csv(report);
  return 0;
}

int cmd_report(CliOptions& opt) {
  std::vector<std::string> files = opt.report_inputs;
  if (files.empty()) throw ConfigError("at least one metrics.csv or directory is required");
  std::vector<std::string> expanded;
  for (const std::string& path : files) {
    if (fs::is_directory(path)) {
      for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().filename() == "metrics.csv") {
          expanded.push_back(entry.path().string());
        }
      }
    } else {
      expanded.push_back(path);
    }
  }
  std::sort(expanded.begin(), expanded.end());
  if (expanded.empty()) throw DataError("no metrics.csv files found");
  const auto rows = aggregate_metrics(expanded);
  const std::string csv = report_csv(rows);
  if (!opt.out_file.empty()) {
    std::ofstream out(opt.out_file);
    out << csv;
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-aware spatial task assignment engine"};
  app.require_subcommand(1);

  CliOptions opt;

  CLI::App* ingest = app.add_subcommand("ingest", "Validate inputs and cache snapshots");
  add_data_options(ingest, opt);
  add_instance_options(ingest, opt);

  CLI::App* train = app.add_subcommand("train-affinity", "Train the category topic model");
  add_data_options(train, opt);
  add_model_options(train, opt);
  train->add_option("--model-out", opt.out_file, "Model file to write");

  CLI::App* mobility = app.add_subcommand("fit-mobility", "Fit per-worker movement models");
  add_data_options(mobility, opt);
  add_model_options(mobility, opt);
  mobility->add_option("--model-out", opt.out_file, "Cache file to write");

  CLI::App* propagation =
      app.add_subcommand("precompute-propagation", "Sample propagation tables for all workers");
  add_data_options(propagation, opt);
  add_model_options(propagation, opt);
  propagation->add_option("--model-out", opt.out_file, "Cache file to write");

  CLI::App* assign = app.add_subcommand("assign", "Assign one instance with one strategy");
  add_data_options(assign, opt);
  add_model_options(assign, opt);
  add_instance_options(assign, opt);
  assign->add_option("--day", opt.day, "Instance day (YYYY-MM-DD)");
  assign->add_option("--strategy", opt.strategy, "MTA, MI, IA, EIA or DIA");

  CLI::App* experiment = app.add_subcommand("experiment", "Run the full day/strategy grid");
  add_data_options(experiment, opt);
  add_model_options(experiment, opt);
  add_instance_options(experiment, opt);
  experiment->add_option("--strategies", opt.config.strategies, "Strategies to run")
      ->delimiter(',');

  CLI::App* report = app.add_subcommand("report", "Aggregate metrics.csv files");
  report->add_option("inputs", opt.report_inputs, "metrics.csv files or directories");
  report->add_option("--report-out", opt.out_file, "Aggregate CSV to write");

  try {
    app.parse(argc, argv);
    finalize(opt);
    if (ingest->parsed()) return cmd_ingest(opt);
    if (train->parsed()) return cmd_train_affinity(opt);
    if (mobility->parsed()) return cmd_fit_mobility(opt);
    if (propagation->parsed()) return cmd_precompute_propagation(opt);
    if (assign->parsed()) return cmd_run(opt, true);
    if (experiment->parsed()) return cmd_run(opt, false);
    if (report->parsed()) return cmd_report(opt);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
