#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "crowdflow/mobility.hpp"
#include "crowdflow/rng.hpp"
#include "oracles.hpp"

using namespace crowdflow;

namespace {

History history_at(const std::vector<GeoPoint>& points) {
  History h;
  Timestamp t = 0;
  for (const GeoPoint& p : points) {
    h.push_back({"v" + std::to_string(t), p, t, t, {}});
    t += 100;
  }
  return h;
}

MobilityOptions planar_options() {
  MobilityOptions options;
  options.metric = Metric::PlanarEuclidean;
  return options;
}

}  // namespace

TEST_CASE("transition matrix: single location") {
  const Matrix m = build_transition_matrix(history_at({{0, 0}}), Metric::PlanarEuclidean);
  REQUIRE(m.size() == 1);
  CHECK(m[0][0] == doctest::Approx(1.0));
}

TEST_CASE("transition matrix: rows uniform over distinct locations") {
  const Matrix two = build_transition_matrix(history_at({{0, 0}, {0, 1}}), Metric::PlanarEuclidean);
  REQUIRE(two.size() == 2);
  for (const auto& row : two) {
    for (double x : row) CHECK(x == doctest::Approx(0.5));
  }
  const Matrix three =
      build_transition_matrix(history_at({{0, 0}, {0, 1}, {1, 0}}), Metric::PlanarEuclidean);
  REQUIRE(three.size() == 3);
  for (const auto& row : three) {
    for (double x : row) CHECK(x == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("transition matrix: repeated visits collapse to distinct locations") {
  const Matrix m = build_transition_matrix(history_at({{0, 0}, {0, 1}, {0, 0}, {0, 1}}),
                                           Metric::PlanarEuclidean);
  CHECK(m.size() == 2);
  CHECK_THROWS_AS(build_transition_matrix({}, Metric::PlanarEuclidean), std::invalid_argument);
}

TEST_CASE("stationary: one location gets everything") {
  const auto p = stationary_distribution({{1.0}}, 0.15, 1e-12);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("stationary: uniform matrix gives the uniform vector at any restart") {
  for (double restart : {0.0, 0.15, 0.5, 0.9}) {
    const Matrix m(4, std::vector<double>(4, 0.25));
    const auto p = stationary_distribution(m, restart, 1e-12);
    for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("stationary: asymmetric matrix matches the dense solve") {
  const Matrix m = {
      {0.1, 0.6, 0.3},
      {0.5, 0.25, 0.25},
      {0.2, 0.2, 0.6},
  };
  const auto iterated = stationary_distribution(m, 0.15, 1e-12);
  const auto solved = oracles::solve_restart_walk(m, 0.15);
  REQUIRE(iterated.size() == solved.size());
  for (std::size_t i = 0; i < solved.size(); ++i) {
    CHECK(iterated[i] == doctest::Approx(solved[i]).epsilon(1e-8));
  }
  CHECK(std::accumulate(iterated.begin(), iterated.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stationary: independent of the start vector") {
  const Matrix m = {
      {0.7, 0.2, 0.1},
      {0.1, 0.8, 0.1},
      {0.3, 0.3, 0.4},
  };
  const auto from_uniform = stationary_distribution(m, 0.2, 1e-13);
  const auto from_corner = stationary_distribution(m, 0.2, 1e-13, {1.0, 0.0, 0.0});
  for (std::size_t i = 0; i < from_uniform.size(); ++i) {
    CHECK(from_uniform[i] == doctest::Approx(from_corner[i]).epsilon(1e-9));
  }
}

TEST_CASE("stationary: malformed matrices rejected") {
  CHECK_THROWS_AS(stationary_distribution({{0.5, 0.2}, {0.5, 0.5}}, 0.15, 1e-10),
                  std::invalid_argument);
  CHECK_THROWS_AS(stationary_distribution({{1.2, -0.2}, {0.5, 0.5}}, 0.15, 1e-10),
                  std::invalid_argument);
  CHECK_THROWS_AS(stationary_distribution({{1.0}}, 1.0, 1e-10), std::invalid_argument);
}

TEST_CASE("decay shape: three hops of length e-1 give shape 1") {
  const double hop = std::exp(1.0) - 1.0;
  const History h = history_at({{0, 0}, {0, hop}, {0, 2 * hop}, {0, 3 * hop}});
  const ParetoFit fit = pareto_shape_mle(h, Metric::PlanarEuclidean);
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.shape == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decay shape: stationary worker falls back") {
  const History h = history_at({{0, 0}, {0, 0}, {0, 0}});
  const ParetoFit fit = pareto_shape_mle(h, Metric::PlanarEuclidean, 10.0);
  CHECK(fit.degenerate);
  CHECK(fit.shape == doctest::Approx(10.0));

  const ParetoFit single = pareto_shape_mle(history_at({{0, 0}}), Metric::PlanarEuclidean, 10.0);
  CHECK(single.degenerate);
}

TEST_CASE("decay shape: closed form maximizes the likelihood") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GeoPoint> points;
    double x = 0.0;
    points.push_back({0, 0});
    for (int hop = 0; hop < 20; ++hop) {
      x += uniform_double(rng) * 5.0;
      points.push_back({0, x});
    }
    const History h = history_at(points);
    const ParetoFit fit = pareto_shape_mle(h, Metric::PlanarEuclidean);
    REQUIRE_FALSE(fit.degenerate);

    std::vector<double> xs;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      xs.push_back(distance_km(h[i].location, h[i + 1].location, Metric::PlanarEuclidean) + 1.0);
    }
    const double numeric = oracles::golden_section_max(
        [&](double pi) { return oracles::pareto_log_likelihood(pi, xs); }, 1e-6, 50.0, 1e-9);
    CHECK(fit.shape == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("willingness: coincident single location gives 1") {
  const MobilityModel model = fit_mobility("w", history_at({{0, 0}}), planar_options());
  CHECK(model.degenerate_shape);  // single record
  CHECK(willingness(model, {0, 0}, Metric::PlanarEuclidean) == doctest::Approx(1.0));
}

TEST_CASE("willingness: hand-computed two-location value") {
  // Stationary (0.5, 0.5), distances 0 and e-1, shape 1:
  // 0.5 * 1 + 0.5 * e^{-1}.
  const double hop = std::exp(1.0) - 1.0;
  History h = history_at({{0, 0}, {0, hop}});
  MobilityModel model;
  model.worker_id = "w";
  model.visited_locations = {{0, 0}, {0, hop}};
  model.stationary = {0.5, 0.5};
  model.pareto_shape = 1.0;
  const double value = willingness(model, {0, 0}, Metric::PlanarEuclidean);
  CHECK(value == doctest::Approx(0.5 + 0.5 / std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("willingness: decreases monotonically as the task recedes") {
  Rng rng(19);
  std::vector<GeoPoint> points;
  for (int i = 0; i < 8; ++i) {
    points.push_back({uniform_double(rng) * 0.1, uniform_double(rng) * 0.1});
  }
  const MobilityModel model = fit_mobility("w", history_at(points), planar_options());
  double previous = 2.0;
  for (double offset = 0.0; offset < 30.0; offset += 1.5) {
    const double value = willingness(model, {0.05, 0.05 + offset}, Metric::PlanarEuclidean);
    CHECK(value > 0.0);
    CHECK(value <= 1.0 + 1e-12);
    CHECK(value < previous + 1e-12);
    previous = value;
  }
}

TEST_CASE("willingness: stays within (0, 1] on random models and tasks") {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GeoPoint> points;
    const int n = 1 + static_cast<int>(uniform_index(rng, 10));
    for (int i = 0; i < n; ++i) {
      points.push_back({uniform_double(rng) * 2, uniform_double(rng) * 2});
    }
    const MobilityModel model = fit_mobility("w", history_at(points), planar_options());
    CHECK(std::accumulate(model.stationary.begin(), model.stationary.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    const GeoPoint task{uniform_double(rng) * 20 - 10, uniform_double(rng) * 20 - 10};
    const double value = willingness(model, task, Metric::PlanarEuclidean);
    CHECK(value > 0.0);
    CHECK(value <= 1.0 + 1e-12);
  }
}

TEST_CASE("mobility cache: hash-checked round-trip") {
  const History h = history_at({{0, 0}, {0, 1}, {1, 1}});
  const MobilityModel model = fit_mobility("w1", h, planar_options());
  const std::map<std::string, std::uint64_t> hashes = {{"w1", history_content_hash(h)}};

  const auto path = std::filesystem::temp_directory_path() / "crowdflow_mobility.json";
  save_mobility_models({{"w1", model}}, hashes, path.string());

  const MobilityMap loaded = load_mobility_models(path.string(), hashes);
  REQUIRE(loaded.count("w1") == 1);
  CHECK(loaded.at("w1").pareto_shape == model.pareto_shape);
  CHECK(loaded.at("w1").stationary == model.stationary);

  // A changed history invalidates the entry.
  const std::map<std::string, std::uint64_t> other = {{"w1", 12345}};
  CHECK(load_mobility_models(path.string(), other).empty());
  std::filesystem::remove(path);
}
