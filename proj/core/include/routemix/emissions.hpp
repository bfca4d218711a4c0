#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "routemix/network.hpp"
#include "routemix/sim.hpp"

namespace routemix::emissions {

using network::EdgeIndex;
using network::RoadNetwork;

/// Polynomial CO2 model in speed s (m/s) and acceleration a (m/s^2), rate in mg/s.
struct EmissionCoefficients {
  std::string label;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;

  /// Throws ValidationError on non-finite values or c0 < 0.
  void validate() const;
};

/// JSON or TOML with keys label, c0..c5.
EmissionCoefficients load_coefficients(const std::filesystem::path& path);
EmissionCoefficients parse_coefficients_json(std::string_view text, std::string_view where = "<coefficients>");

/// max(0, c0 + c1*s*a + c2*s*a^2 + c3*s + c4*s^2 + c5*s^3).
inline double instantaneous_emission(const EmissionCoefficients& c, double s, double a) noexcept {
  const double v = c.c0 + c.c1 * s * a + c.c2 * s * a * a + c.c3 * s + c.c4 * s * s + c.c5 * s * s * s;
  return v > 0.0 ? v : 0.0;
}

/// Road network annotated with per-edge CO2 mass. Keeps its own copy of edge
/// ids and lengths so it outlives the network it was built from.
class WeightedNetwork {
 public:
  WeightedNetwork() = default;
  WeightedNetwork(std::vector<std::string> edge_ids, std::vector<double> lengths, std::vector<double> mass_mg);
  static WeightedNetwork zeros(const RoadNetwork& net);

  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const std::string> edge_ids() const noexcept { return ids_; }
  std::span<const double> lengths() const noexcept { return lengths_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double mass(EdgeIndex e) const { return mass_.at(e); }

  /// Same edge ids and lengths in the same order.
  bool same_network(const WeightedNetwork& other) const noexcept;

 private:
  std::vector<std::string> ids_;
  std::vector<double> lengths_;
  std::vector<double> mass_;
};

/// Streaming accumulator: add points one at a time, then finish(). Each edge
/// sum uses compensated addition.
class EmissionAccumulator {
 public:
  EmissionAccumulator(const RoadNetwork& net, EmissionCoefficients coef, double dt);

  /// Emission mass (mg) of one trajectory point.
  double add(const sim::TrajectoryPoint& p);
  /// Compensated running total of everything added.
  double total() const noexcept { return total_.value(); }
  WeightedNetwork finish() const;

 private:
  struct Neumaier {
    double sum = 0.0, comp = 0.0;
    void add(double x) noexcept;
    double value() const noexcept { return sum + comp; }
  };

  const RoadNetwork& net_;
  EmissionCoefficients coef_;
  double dt_;
  std::vector<Neumaier> per_edge_;
  Neumaier total_;
};

/// Sums emission rate * dt per point onto the edge occupied at the step start.
/// Throws ValidationError if a point names an edge outside the network.
WeightedNetwork aggregate(const sim::TrajectoryLog& log, const EmissionCoefficients& coef, const RoadNetwork& net,
                          double dt);

/// Compensated sum of all per-edge masses.
double total_emissions(const WeightedNetwork& g);

/// mass / length per edge.
std::vector<double> per_meter(const WeightedNetwork& g);

/// per_meter(a) - per_meter(b). Throws ValidationError if the networks differ.
std::vector<double> emission_diff(const WeightedNetwork& a, const WeightedNetwork& b);

/// Masses with zero-emission edges dropped unless include_zero is set.
std::vector<double> edge_masses(const WeightedNetwork& g, bool include_zero = false);

// I/O. CSV columns: edge_id,co2_mg,co2_mg_per_m
void write_weighted_csv(const std::filesystem::path& path, const WeightedNetwork& g);
WeightedNetwork read_weighted_csv(const std::filesystem::path& path, const RoadNetwork& net);

/// FeatureCollection of edge LineStrings carrying `property` per edge.
std::string to_geojson(const RoadNetwork& net, std::span<const double> values, std::string_view property);

}  // namespace routemix::emissions
