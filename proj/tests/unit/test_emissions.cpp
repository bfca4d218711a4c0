#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "routemix/emissions.hpp"
#include "routemix/error.hpp"

using namespace routemix;
using namespace routemix::emissions;
using sim::TrajectoryLog;
using sim::TrajectoryPoint;
namespace fs = std::filesystem;

namespace {

EmissionCoefficients ones() { return {"ones", 1, 1, 1, 1, 1, 1}; }

EmissionCoefficients defaults() {
  return load_coefficients(fs::path(ROUTEMIX_DATA_DIR) / "default_passenger_car.json");
}

}  // namespace

TEST(Instantaneous, HandValues) {
  EXPECT_DOUBLE_EQ(instantaneous_emission(ones(), 2.0, 1.0), 19.0);
  const auto c = defaults();
  EXPECT_DOUBLE_EQ(instantaneous_emission(c, 0.0, 0.0), c.c0);
  const EmissionCoefficients neg{"neg", 0, 10, 0, 0, 0, 0};
  EXPECT_EQ(instantaneous_emission(neg, 10.0, -5.0), 0.0);
}

TEST(Instantaneous, NeverNegativeOnGrid) {
  const auto c = defaults();
  for (double s = 0; s <= 40; s += 0.5)
    for (double a = -9; a <= 4; a += 0.25) ASSERT_GE(instantaneous_emission(c, s, a), 0.0);
}

TEST(Coefficients, DefaultsLoadFromBothFormats) {
  const auto j = defaults();
  const auto t = load_coefficients(fs::path(ROUTEMIX_DATA_DIR) / "default_passenger_car.toml");
  EXPECT_EQ(j.label, t.label);
  EXPECT_DOUBLE_EQ(j.c0, t.c0);
  EXPECT_DOUBLE_EQ(j.c5, t.c5);
  EXPECT_GT(j.c0, 0.0);
}

TEST(Coefficients, Validation) {
  EXPECT_THROW(parse_coefficients_json(R"({"label":"x","c0":-1,"c1":0,"c2":0,"c3":0,"c4":0,"c5":0})"), Error);
  EXPECT_THROW(parse_coefficients_json(R"({"label":"x","c0":1})"), Error);
  EXPECT_THROW(parse_coefficients_json("{"), ParseError);
}

TEST(Aggregate, IdlingTenSteps) {
  const auto net = oracle::line_network(3, 100, 10);
  const auto c = defaults();
  TrajectoryLog log;
  for (int k = 0; k < 10; ++k) log.points.push_back({0, 1, double(k), 20.0, 0.0, 0.0});
  const auto g = aggregate(log, c, net, 1.0);
  for (network::EdgeIndex e = 0; e < net.edge_count(); ++e)
    EXPECT_DOUBLE_EQ(g.mass(e), e == 1 ? 10 * c.c0 : 0.0);
  EXPECT_DOUBLE_EQ(total_emissions(g), 10 * c.c0);
}

TEST(Aggregate, DisjointEdgesAdd) {
  const auto net = oracle::line_network(4, 100, 10);
  const auto c = defaults();
  TrajectoryLog a, b, both;
  a.points = {{0, 0, 0, 0, 5, 1}, {0, 0, 1, 5, 6, 1}};
  b.points = {{1, 3, 0, 0, 8, 2}, {1, 3, 1, 8, 7, -1}};
  both.points = a.points;
  both.points.insert(both.points.end(), b.points.begin(), b.points.end());
  const auto ga = aggregate(a, c, net, 1.0), gb = aggregate(b, c, net, 1.0), gab = aggregate(both, c, net, 1.0);
  for (network::EdgeIndex e = 0; e < net.edge_count(); ++e) EXPECT_DOUBLE_EQ(gab.mass(e), ga.mass(e) + gb.mass(e));
}

TEST(Aggregate, FlatSumOracleAndPermutationInvariance) {
  const auto net = network::synth_grid(6, 6, 100, 10);
  const auto c = defaults();
  Rng rng(12);
  TrajectoryLog log;
  for (std::uint32_t v = 0; v < 100; ++v)
    for (int k = 0; k < 60; ++k)
      log.points.push_back({v, static_cast<network::EdgeIndex>(rng.below(net.edge_count())), double(k),
                            rng.uniform(0, 100), rng.uniform(0, 15), rng.uniform(-4.5, 2.6)});
  const double dt = 0.5;
  long double flat = 0;
  for (const auto& p : log.points) flat += static_cast<long double>(instantaneous_emission(c, p.speed, p.accel)) * dt;
  const auto g = aggregate(log, c, net, dt);
  EXPECT_NEAR(total_emissions(g), static_cast<double>(flat), 1e-9 * static_cast<double>(flat));

  auto shuffled = log;
  std::mt19937_64 eng(3);
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), eng);
  const auto g2 = aggregate(shuffled, c, net, dt);
  for (network::EdgeIndex e = 0; e < net.edge_count(); ++e) EXPECT_NEAR(g2.mass(e), g.mass(e), 1e-9 * (1 + g.mass(e)));

  EmissionAccumulator acc(net, c, dt);
  for (const auto& p : log.points) acc.add(p);
  EXPECT_NEAR(acc.total(), total_emissions(g), 1e-9 * total_emissions(g));
}

TEST(Aggregate, UnknownEdgeRejected) {
  const auto net = oracle::line_network(2, 100, 10);
  TrajectoryLog log;
  log.points.push_back({0, 99, 0, 0, 0, 0});
  EXPECT_THROW(aggregate(log, defaults(), net, 1.0), ValidationError);
}

TEST(Total, SmallCases) {
  const auto net = oracle::line_network(2, 100, 10);
  EXPECT_EQ(total_emissions(WeightedNetwork::zeros(net)), 0.0);
  const WeightedNetwork g({"a", "b"}, {10, 20}, {5, 7});
  EXPECT_DOUBLE_EQ(total_emissions(g), 12.0);
}

TEST(PerMeter, Divides) {
  const WeightedNetwork g({"a", "b"}, {50, 20}, {100, 0});
  const auto pm = per_meter(g);
  EXPECT_DOUBLE_EQ(pm[0], 2.0);
  EXPECT_DOUBLE_EQ(pm[1], 0.0);
}

TEST(Diff, HandCaseAndAntisymmetry) {
  const WeightedNetwork a({"x", "y"}, {10, 10}, {10, 0});
  const WeightedNetwork b({"x", "y"}, {10, 10}, {0, 10});
  EXPECT_EQ(emission_diff(a, b), (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(emission_diff(a, a), (std::vector<double>{0.0, 0.0}));
  const auto ab = emission_diff(a, b), ba = emission_diff(b, a);
  for (std::size_t k = 0; k < ab.size(); ++k) EXPECT_EQ(ab[k], -ba[k]);
  const WeightedNetwork other({"x", "z"}, {10, 10}, {0, 10});
  EXPECT_THROW(emission_diff(a, other), ValidationError);
}

TEST(EdgeMasses, ZeroFiltering) {
  const WeightedNetwork g({"a", "b", "c"}, {1, 1, 1}, {3, 0, 4});
  EXPECT_EQ(edge_masses(g), (std::vector<double>{3, 4}));
  EXPECT_EQ(edge_masses(g, true), (std::vector<double>{3, 0, 4}));
}

TEST(WeightedIo, CsvRoundTripAndGeoJson) {
  const auto net = oracle::line_network(3, 100, 10);
  std::vector<double> mass{1.5, 0.0, 2.25, 1e6};
  const WeightedNetwork g({"f0", "r0", "f1", "r1"}, {100, 100, 100, 100}, mass);
  const auto path = fs::temp_directory_path() / "routemix_weighted.csv";
  write_weighted_csv(path, g);
  const auto back = read_weighted_csv(path, net);
  EXPECT_TRUE(back.same_network(g));
  for (std::size_t k = 0; k < mass.size(); ++k) EXPECT_DOUBLE_EQ(back.mass(k), mass[k]);

  const auto gj = nlohmann::json::parse(to_geojson(net, mass, "co2_mg"));
  EXPECT_EQ(gj["type"], "FeatureCollection");
  ASSERT_EQ(gj["features"].size(), 4u);
  EXPECT_DOUBLE_EQ(gj["features"][2]["properties"]["co2_mg"].get<double>(), 2.25);
  EXPECT_EQ(gj["features"][0]["geometry"]["type"], "LineString");
}
