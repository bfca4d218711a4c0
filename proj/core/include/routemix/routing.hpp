#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "routemix/demand.hpp"
#include "routemix/network.hpp"
#include "routemix/rng.hpp"

namespace routemix::routing {

using network::EdgeIndex;
using network::RoadNetwork;

class NavigationProvider;

/// Which router produced a path.
struct PathSource {
  enum class Kind { fastest, perturbed, external };
  Kind kind = Kind::fastest;
  double w = 1.0;     // perturbed only
  std::string name;   // external only

  static PathSource fastest() { return {Kind::fastest, 1.0, {}}; }
  static PathSource perturbed(double w) { return {Kind::perturbed, w, {}}; }
  static PathSource external(std::string name) { return {Kind::external, 1.0, std::move(name)}; }

  /// "FASTEST", "PERTURBED(5)", "EXTERNAL(name)".
  std::string label() const;
  static PathSource parse(std::string_view label);

  bool operator==(const PathSource&) const = default;
};

/// Edge sequence from origin edge to destination edge, both inclusive.
struct RoutedPath {
  std::string vehicle_id;
  std::vector<EdgeIndex> edges;
  PathSource source;
};

struct RoutedDemand {
  std::vector<RoutedPath> paths;
  int mix_fraction = 0;           // i: i*10 percent of paths come from the provider
  std::string provider_name;
  std::size_t size() const noexcept { return paths.size(); }
};

/// Throws ValidationError if `edges` is empty, not connected end-to-end,
/// repeats an edge consecutively, or does not start/end at the given edges.
void validate_path(const RoadNetwork& net, std::span<const EdgeIndex> edges, EdgeIndex origin, EdgeIndex dest);

/// Sum of free-flow times over every edge of the path.
double path_cost(const RoadNetwork& net, std::span<const EdgeIndex> edges);

/// Reusable shortest-path engine over the edge graph.
///
/// Path cost is the sum of per-edge weights over every edge of the path,
/// origin and destination included. Among equal-cost paths the
/// lexicographically smallest edge-id sequence wins.
class Router {
 public:
  explicit Router(const RoadNetwork& net);

  /// Throws RoutingError when dest is unreachable from origin.
  std::vector<EdgeIndex> shortest(EdgeIndex origin, EdgeIndex dest, std::span<const double> weights);

  const RoadNetwork& network() const noexcept { return net_; }
  std::span<const double> free_flow_weights() const noexcept { return free_flow_; }

 private:
  const RoadNetwork& net_;
  std::vector<double> free_flow_;
  std::vector<double> dist_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

RoutedPath fastest_path(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest);
RoutedPath fastest_path(Router& router, EdgeIndex origin, EdgeIndex dest);

/// Shortest path under weights free_flow_time(e) * U_e with U_e ~ Uniform[1, w]
/// drawn independently per edge on every call. w = 1 reproduces fastest_path.
RoutedPath perturbed_fastest_path(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest, double w, Rng& rng);
RoutedPath perturbed_fastest_path(Router& router, EdgeIndex origin, EdgeIndex dest, double w, Rng& rng);

/// Asks the provider for a path and validates it; invalid paths are rejected,
/// never repaired.
RoutedPath external_route(NavigationProvider& provider, const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest);

/// Number of provider-routed paths for mixing fraction i: round(n * i / 10).
std::size_t provider_share(std::size_t n, int i);

/// Routes a demand with a uniformly random subset of round(N*i/10) trips
/// assigned to `provider` and the rest perturbed with parameter w. Each
/// vehicle draws from its own generator keyed by (seed, vehicle_id).
RoutedDemand route_demand(const demand::MobilityDemand& demand, int i, NavigationProvider& provider, double w,
                          std::uint64_t seed, const RoadNetwork& net);

/// Symmetrized segment-path distance between two paths, in meters.
double sspd(const RoutedPath& a, const RoutedPath& b, const RoadNetwork& net);
double sspd(std::span<const EdgeIndex> a, std::span<const EdgeIndex> b, const RoadNetwork& net);

struct PerturbationRow {
  double w = 1.0;
  double mean_sspd = 0.0;
  std::size_t pairs = 0;
};

/// Mean SSPD between perturbed and exact fastest paths over n_pairs random
/// origin-destination edge pairs, for each w.
std::vector<PerturbationRow> perturbation_curve(const RoadNetwork& net, std::size_t n_pairs,
                                                std::span<const double> w_values, Rng& rng);

// RoutedDemand JSON: [{"vehicle_id","provider","edges":[...]}, ...]
std::string to_json(const RoutedDemand& d, const RoadNetwork& net);
RoutedDemand parse_routed_demand(std::string_view json_text, const RoadNetwork& net, std::string_view source = "<routes>");
RoutedDemand load_routed_demand(const std::filesystem::path& path, const RoadNetwork& net);
void save_routed_demand(const std::filesystem::path& path, const RoutedDemand& d, const RoadNetwork& net);

}  // namespace routemix::routing
