#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crowdflow/affinity.hpp"
#include "crowdflow/assign.hpp"
#include "crowdflow/harness.hpp"
#include "crowdflow/influence.hpp"
#include "crowdflow/ingest.hpp"
#include "crowdflow/mobility.hpp"
#include "crowdflow/propagation.hpp"

namespace py = pybind11;
using namespace crowdflow;

namespace {

GeoPoint point_from(const std::pair<double, double>& p) { return {p.first, p.second}; }

SocialGraph graph_from_edges(const std::vector<std::string>& nodes,
                             const std::vector<std::pair<std::string, std::string>>& edges) {
  return SocialGraph::build(nodes, edges);
}

Snapshot snapshot_from(Timestamp instant, const std::vector<Worker>& workers,
                       const std::vector<SpatialTask>& tasks) {
  Snapshot snap{instant, workers, tasks};
  validate_snapshot(snap);
  return snap;
}

}  // namespace

PYBIND11_MODULE(crowdflow, m) {
  m.doc() = "Influence-aware spatial task assignment engine";

  py::enum_<Metric>(m, "Metric")
      .value("HAVERSINE", Metric::Haversine)
      .value("PLANAR_EUCLIDEAN", Metric::PlanarEuclidean);

  py::enum_<Strategy>(m, "Strategy")
      .value("MTA", Strategy::MTA)
      .value("MI", Strategy::MI)
      .value("IA", Strategy::IA)
      .value("EIA", Strategy::EIA)
      .value("DIA", Strategy::DIA);

  m.def(
      "distance_km",
      [](std::pair<double, double> a, std::pair<double, double> b, Metric metric) {
        return distance_km(point_from(a), point_from(b), metric);
      },
      py::arg("a"), py::arg("b"), py::arg("metric") = Metric::Haversine);
  m.def("travel_time_seconds", &travel_time_seconds, py::arg("distance_km"), py::arg("speed_kmh"));

  py::class_<Worker>(m, "Worker")
      .def(py::init([](const std::string& id, std::pair<double, double> location, double reach,
                       double speed) {
             Worker w{id, point_from(location), reach, speed};
             validate_worker(w);
             return w;
           }),
           py::arg("id"), py::arg("location"), py::arg("reach_radius_km") = 25.0,
           py::arg("speed_kmh") = 5.0)
      .def_readonly("id", &Worker::id)
      .def_readonly("reach_radius_km", &Worker::reach_radius_km)
      .def_readonly("speed_kmh", &Worker::speed_kmh);

  py::class_<SpatialTask>(m, "SpatialTask")
      .def(py::init([](const std::string& id, std::pair<double, double> location,
                       Timestamp publication_time, Duration valid_duration,
                       const std::set<std::string>& categories) {
             SpatialTask s{id, point_from(location), publication_time, valid_duration, categories};
             validate_task(s);
             return s;
           }),
           py::arg("id"), py::arg("location"), py::arg("publication_time"),
           py::arg("valid_duration"), py::arg("categories"))
      .def_readonly("id", &SpatialTask::id)
      .def_readonly("publication_time", &SpatialTask::publication_time)
      .def_readonly("valid_duration", &SpatialTask::valid_duration);

  py::class_<Snapshot>(m, "Snapshot")
      .def(py::init(&snapshot_from), py::arg("instant"), py::arg("workers"), py::arg("tasks"))
      .def_readonly("instant", &Snapshot::instant);

  py::class_<CandidatePair>(m, "CandidatePair")
      .def_readonly("worker_id", &CandidatePair::worker_id)
      .def_readonly("task_id", &CandidatePair::task_id)
      .def_readonly("distance_km", &CandidatePair::distance_km)
      .def_readonly("travel_seconds", &CandidatePair::travel_seconds);

  m.def("eligible_pairs", &eligible_pairs, py::arg("snapshot"),
        py::arg("metric") = Metric::Haversine);

  py::class_<CategoryDocument>(m, "CategoryDocument")
      .def(py::init([](const std::string& owner, const std::vector<std::string>& tokens) {
             CategoryDocument doc{owner, tokens};
             std::sort(doc.tokens.begin(), doc.tokens.end());
             return doc;
           }),
           py::arg("owner"), py::arg("tokens"))
      .def_readonly("owner", &CategoryDocument::owner)
      .def_readonly("tokens", &CategoryDocument::tokens);

  py::class_<TopicModel>(m, "TopicModel")
      .def_readonly("num_topics", &TopicModel::num_topics)
      .def_readonly("vocabulary", &TopicModel::vocabulary)
      .def_readonly("topic_term", &TopicModel::topic_term)
      .def("infer",
           [](const TopicModel& model, const CategoryDocument& doc) {
             return infer_topics(model, doc).distribution;
           })
      .def("affinity", [](const TopicModel& model, const CategoryDocument& a,
                          const CategoryDocument& b) { return affinity(model, a, b); })
      .def("save", &save_topic_model, py::arg("path"));

  m.def(
      "train_topic_model",
      [](const std::vector<CategoryDocument>& docs, int num_topics, double alpha, double beta,
         int iterations, int infer_iterations, std::uint64_t seed) {
        TrainOptions options{num_topics, alpha, beta, iterations, infer_iterations, seed};
        return train_topic_model(docs, options);
      },
      py::arg("documents"), py::arg("num_topics") = 50, py::arg("alpha") = -1.0,
      py::arg("beta") = 0.01, py::arg("iterations") = 1000, py::arg("infer_iterations") = 100,
      py::arg("seed") = 1);
  m.def("load_topic_model", &load_topic_model, py::arg("path"));

  py::class_<MobilityModel>(m, "MobilityModel")
      .def_readonly("worker_id", &MobilityModel::worker_id)
      .def_readonly("stationary", &MobilityModel::stationary)
      .def_readonly("pareto_shape", &MobilityModel::pareto_shape)
      .def_readonly("degenerate_shape", &MobilityModel::degenerate_shape)
      .def(
          "willingness",
          [](const MobilityModel& model, std::pair<double, double> location, Metric metric) {
            return willingness(model, point_from(location), metric);
          },
          py::arg("location"), py::arg("metric") = Metric::Haversine);

  m.def(
      "fit_mobility",
      [](const std::string& worker_id,
         const std::vector<std::pair<std::int64_t, std::pair<double, double>>>& visits,
         Metric metric, double restart, double shape_fallback) {
        History history;
        for (const auto& [when, where] : visits) {
          history.push_back({"", point_from(where), when, when, {}});
        }
        std::sort(history.begin(), history.end(),
                  [](const HistoryRecord& a, const HistoryRecord& b) {
                    return a.arrival_time < b.arrival_time;
                  });
        MobilityOptions options;
        options.metric = metric;
        options.restart = restart;
        options.shape_fallback = shape_fallback;
        return fit_mobility(worker_id, history, options);
      },
      py::arg("worker_id"), py::arg("visits"), py::arg("metric") = Metric::Haversine,
      py::arg("restart") = 0.15, py::arg("shape_fallback") = 10.0);

  m.def("stationary_distribution", &stationary_distribution, py::arg("matrix"),
        py::arg("restart") = 0.15, py::arg("tolerance") = 1e-10,
        py::arg("start") = std::vector<double>{});

  py::class_<SocialGraph>(m, "SocialGraph")
      .def(py::init(&graph_from_edges), py::arg("nodes"), py::arg("edges"))
      .def_property_readonly("num_workers", &SocialGraph::num_workers)
      .def_property_readonly("worker_ids", &SocialGraph::worker_ids)
      .def("in_degree", &SocialGraph::in_degree);

  py::class_<PropagationParams>(m, "PropagationParams")
      .def(py::init([](double eps, double confidence_exponent, bool fraction_mode) {
             PropagationParams params{eps, confidence_exponent, fraction_mode};
             params.validate();
             return params;
           }),
           py::arg("eps") = 0.1, py::arg("confidence_exponent") = 1.0,
           py::arg("fraction_mode") = false)
      .def_readonly("eps", &PropagationParams::eps)
      .def_readonly("confidence_exponent", &PropagationParams::confidence_exponent);

  py::class_<PropagationTable>(m, "PropagationTable")
      .def_readonly("source_id", &PropagationTable::source_id)
      .def_readonly("raw", &PropagationTable::raw)
      .def_readonly("clamped", &PropagationTable::clamped);

  m.def(
      "simulate_cascade",
      [](const SocialGraph& graph, const std::string& seed_worker, std::uint64_t seed) {
        const auto index = graph.index_of(seed_worker);
        if (!index) throw std::invalid_argument("unknown worker: " + seed_worker);
        Rng rng(seed);
        std::vector<std::string> informed;
        for (int i : simulate_cascade(graph, *index, rng)) informed.push_back(graph.id_of(i));
        return informed;
      },
      py::arg("graph"), py::arg("seed_worker"), py::arg("seed") = 1);

  m.def(
      "propagation_tables",
      [](const SocialGraph& graph, const PropagationParams& params, std::uint64_t seed) {
        Rng rng(seed);
        const RrrCollection collection = build_collection(graph, params, rng);
        std::map<std::string, PropagationTable> tables;
        for (int w = 0; w < graph.num_workers(); ++w) {
          tables.emplace(graph.id_of(w), propagation_table(collection, w, graph, params));
        }
        return tables;
      },
      py::arg("graph"), py::arg("params") = PropagationParams{}, py::arg("seed") = 1);

  m.def("worker_task_influence", &worker_task_influence, py::arg("p_aff"), py::arg("willingness"),
        py::arg("propagation"), py::arg("self_index"));
  m.def("entropy_from_counts", &entropy_from_counts, py::arg("counts"));

  m.def("edge_cost", &edge_cost, py::arg("strategy"), py::arg("influence"), py::arg("entropy"),
        py::arg("distance_km"), py::arg("reach_radius_km"));

  py::class_<PlanEntry>(m, "PlanEntry")
      .def_readonly("task_id", &PlanEntry::task_id)
      .def_readonly("worker_id", &PlanEntry::worker_id)
      .def_readonly("cost", &PlanEntry::cost)
      .def_readonly("influence", &PlanEntry::influence)
      .def_readonly("distance_km", &PlanEntry::distance_km);

  py::class_<AssignmentPlan>(m, "AssignmentPlan")
      .def_readonly("pairs", &AssignmentPlan::pairs)
      .def_readonly("total_cost", &AssignmentPlan::total_cost)
      .def("__len__", [](const AssignmentPlan& plan) { return plan.size(); });

  m.def(
      "assign",
      [](Strategy strategy, const Snapshot& snapshot,
         const std::map<std::pair<std::string, std::string>, double>& influence,
         const std::map<std::string, double>& entropies, Metric metric) {
        PairScores scores(influence.begin(), influence.end());
        EntropyMap ent(entropies.begin(), entropies.end());
        return assign_with_strategy(strategy, snapshot, scores, ent, metric);
      },
      py::arg("strategy"), py::arg("snapshot"),
      py::arg("influence") = std::map<std::pair<std::string, std::string>, double>{},
      py::arg("entropies") = std::map<std::string, double>{},
      py::arg("metric") = Metric::Haversine);
}
